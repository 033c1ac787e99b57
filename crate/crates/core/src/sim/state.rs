use crate::field::Field2D;

/// Pressure and CO₂ saturation at elapsed time `t` (months).
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub p: Field2D,
    pub sg: Field2D,
    pub t: f64,
}

impl SimState {
    pub fn new(p: Field2D, sg: Field2D, t: f64) -> Self {
        Self { p, sg, t }
    }

    pub fn bitwise_eq(&self, other: &SimState) -> bool {
        let eq = |a: &Field2D, b: &Field2D| {
            a.same_shape(b) && a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits())
        };
        self.t.to_bits() == other.t.to_bits() && eq(&self.p, &other.p) && eq(&self.sg, &other.sg)
    }
}
