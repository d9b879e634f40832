//! Support library for the `sourcetrace` binary: the text file formats for
//! networks and cascades.

pub mod formats;
