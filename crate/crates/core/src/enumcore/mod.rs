//! Stage-indexed sets, separator strings, and the column pairing shared by
//! every construction.

mod pairing;
mod separator;
mod stageset;

pub use pairing::{pair, unpair, PairingScheme, PAIRING_SCHEME_ID};
pub use separator::{is_separator, SeparatorSnapshot};
pub use stageset::{FreshCounter, Stage, StageSet};
