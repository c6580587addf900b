//! Serialize complex numbers as `{ "re": .., "im": .. }`.

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::Serializer;

pub fn serialize<S: Serializer>(z: &Complex64, serializer: S) -> Result<S::Ok, S::Error> {
    let mut state = serializer.serialize_struct("Complex", 2)?;
    state.serialize_field("re", &z.re)?;
    state.serialize_field("im", &z.im)?;
    state.end()
}

pub mod vec {
    use num_complex::Complex64;
    use serde::ser::SerializeSeq;
    use serde::{Serialize, Serializer};

    struct Wrapped<'a>(&'a Complex64);

    impl Serialize for Wrapped<'_> {
        fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
            super::serialize(self.0, serializer)
        }
    }

    pub fn serialize<S: Serializer>(values: &[Complex64], serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(values.len()))?;
        for z in values {
            seq.serialize_element(&Wrapped(z))?;
        }
        seq.end()
    }
}
