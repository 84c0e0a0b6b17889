//! Fixed-precision resource quantities.
//!
//! Every capacity, demand and bandwidth is held as an integer count of
//! thousandths of a unit so that allocate/release round trips are exact.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ResourceError;

/// Number of fractional decimal digits kept by [`Quantity`].
pub const DECIMALS: u32 = 3;
const SCALE: i64 = 10_i64.pow(DECIMALS);

/// A nonnegative amount of some resource, in thousandths of a unit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quantity(i64);

impl Quantity {
    pub const ZERO: Quantity = Quantity(0);

    /// Rounds `units` to the nearest representable quantity.
    ///
    /// Negative or non-finite inputs are rejected.
    pub fn from_units(units: f64) -> Result<Self, ResourceError> {
        if !units.is_finite() || units < 0.0 {
            return Err(ResourceError::InvalidQuantity(units));
        }
        Ok(Quantity((units * SCALE as f64).round() as i64))
    }

    pub const fn from_milli(milli: i64) -> Self {
        assert!(milli >= 0, "quantities are nonnegative");
        Quantity(milli)
    }

    pub const fn milli(self) -> i64 {
        self.0
    }

    pub fn units(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_sub(self, rhs: Quantity) -> Option<Quantity> {
        (self.0 >= rhs.0).then(|| Quantity(self.0 - rhs.0))
    }

    /// `self * factor`, used for bandwidth times hop count.
    pub fn times(self, factor: usize) -> Quantity {
        Quantity(self.0 * factor as i64)
    }
}

impl Add for Quantity {
    type Output = Quantity;
    fn add(self, rhs: Quantity) -> Quantity {
        Quantity(self.0 + rhs.0)
    }
}

impl AddAssign for Quantity {
    fn add_assign(&mut self, rhs: Quantity) {
        self.0 += rhs.0;
    }
}

impl Sum for Quantity {
    fn sum<I: Iterator<Item = Quantity>>(iter: I) -> Quantity {
        iter.fold(Quantity::ZERO, Add::add)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}", self.0 / SCALE, self.0 % SCALE)
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.units())
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let units = f64::deserialize(d)?;
        Quantity::from_units(units).map_err(serde::de::Error::custom)
    }
}

/// Which component of a [`ResourceVector`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resource {
    Cpu,
    Memory,
    Gpu,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resource::Cpu => "cpu",
            Resource::Memory => "memory",
            Resource::Gpu => "gpu",
        })
    }
}

/// CPU cores, memory in GB and GPU cores held by or demanded of a node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceVector {
    pub cpu: Quantity,
    pub memory: Quantity,
    pub gpu: Quantity,
}

impl ResourceVector {
    pub const ZERO: ResourceVector =
        ResourceVector { cpu: Quantity::ZERO, memory: Quantity::ZERO, gpu: Quantity::ZERO };

    pub fn new(cpu: Quantity, memory: Quantity, gpu: Quantity) -> Self {
        ResourceVector { cpu, memory, gpu }
    }

    /// Builds a vector from unit values; convenient in tests and bindings.
    pub fn from_units(cpu: f64, memory: f64, gpu: f64) -> Result<Self, ResourceError> {
        Ok(ResourceVector {
            cpu: Quantity::from_units(cpu)?,
            memory: Quantity::from_units(memory)?,
            gpu: Quantity::from_units(gpu)?,
        })
    }

    pub fn cpu_only(cpu: f64) -> Result<Self, ResourceError> {
        Self::from_units(cpu, 0.0, 0.0)
    }

    pub fn get(&self, resource: Resource) -> Quantity {
        match resource {
            Resource::Cpu => self.cpu,
            Resource::Memory => self.memory,
            Resource::Gpu => self.gpu,
        }
    }

    /// Componentwise `self <= other`.
    pub fn fits_within(&self, other: &ResourceVector) -> bool {
        self.cpu <= other.cpu && self.memory <= other.memory && self.gpu <= other.gpu
    }

    /// First component where `self` exceeds `other`, if any.
    pub fn first_excess(&self, other: &ResourceVector) -> Option<Resource> {
        [Resource::Cpu, Resource::Memory, Resource::Gpu].into_iter().find(|&r| self.get(r) > other.get(r))
    }

    /// Componentwise subtraction; fails instead of clamping when any
    /// component would go negative.
    pub fn checked_sub(&self, rhs: &ResourceVector) -> Result<ResourceVector, ResourceError> {
        if let Some(resource) = rhs.first_excess(self) {
            return Err(ResourceError::Underflow {
                resource,
                available: self.get(resource),
                requested: rhs.get(resource),
            });
        }
        Ok(ResourceVector {
            cpu: Quantity(self.cpu.0 - rhs.cpu.0),
            memory: Quantity(self.memory.0 - rhs.memory.0),
            gpu: Quantity(self.gpu.0 - rhs.gpu.0),
        })
    }

    /// Sum of all components, used as part of the demand ordering key.
    pub fn total(&self) -> Quantity {
        self.cpu + self.memory + self.gpu
    }
}

impl Add for ResourceVector {
    type Output = ResourceVector;
    fn add(self, rhs: ResourceVector) -> ResourceVector {
        ResourceVector { cpu: self.cpu + rhs.cpu, memory: self.memory + rhs.memory, gpu: self.gpu + rhs.gpu }
    }
}

impl AddAssign for ResourceVector {
    fn add_assign(&mut self, rhs: ResourceVector) {
        *self = *self + rhs;
    }
}

impl Sum for ResourceVector {
    fn sum<I: Iterator<Item = ResourceVector>>(iter: I) -> ResourceVector {
        iter.fold(ResourceVector::ZERO, Add::add)
    }
}
