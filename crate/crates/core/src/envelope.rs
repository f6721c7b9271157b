//! JSON plumbing shared by the library types and the CLI envelope.

use num_complex::Complex64;
use serde::ser::SerializeTuple;
use serde::Serializer;

/// Serializes a complex number as `[re, im]`.
pub fn complex_pair<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

pub fn optional_complex_pair<S: Serializer>(z: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
    match z {
        Some(z) => complex_pair(z, s),
        None => s.serialize_none(),
    }
}
