pub mod builtin;
pub mod circuits;
pub mod compose;
pub mod concurrence;
pub mod error;
pub mod gspn;
pub mod io;
pub mod multiset;
pub mod net;
pub mod quantum;

pub use error::{ErrorKind, QpnError, Result};
