use crate::error::{Error, Result};
use crate::numeric::matrix::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Matrix,
    /// Projected onto the non-negative orthant after every optimizer step.
    pub nonneg: bool,
}

/// Ordered, uniquely named collection of parameter matrices.
///
/// Vectors are stored as single-column matrices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    params: Vec<Param>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Matrix, nonneg: bool) -> Result<()> {
        if self.index_of(name).is_some() {
            return Err(Error::Config(format!("duplicate parameter name `{name}`")));
        }
        if nonneg && value.min() < 0.0 {
            return Err(Error::Config(format!("non-negative parameter `{name}` has negative entries")));
        }
        self.params.push(Param { name: name.to_owned(), value, nonneg });
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.params.iter().find(|p| p.name == name).map(|p| &p.value)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Matrix> {
        self.params.iter_mut().find(|p| p.name == name).map(|p| &mut p.value)
    }

    pub fn expect(&self, name: &str) -> Result<&Matrix> {
        self.get(name).ok_or_else(|| Error::Shape(format!("missing parameter `{name}`")))
    }

    pub fn expect_mut(&mut self, name: &str) -> Result<&mut Matrix> {
        self.get_mut(name).ok_or_else(|| Error::Shape(format!("missing parameter `{name}`")))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.name.as_str())
    }

    /// Total number of scalar entries.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Same names, shapes and flags, all entries zero.
    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    value: Matrix::zeros(p.value.rows(), p.value.cols()),
                    nonneg: p.nonneg,
                })
                .collect(),
        }
    }

    /// Checks that `other` has the same names in the same order with the
    /// same shapes.
    pub fn check_compatible(&self, other: &ParamSet) -> Result<()> {
        if self.params.len() != other.params.len() {
            return Err(Error::Shape(format!(
                "parameter sets differ in size: {} vs {}",
                self.params.len(),
                other.params.len()
            )));
        }
        for (a, b) in self.params.iter().zip(&other.params) {
            if a.name != b.name {
                return Err(Error::Shape(format!("parameter `{}` vs `{}`", a.name, b.name)));
            }
            b.value.expect_shape(a.value.shape(), &a.name)?;
        }
        Ok(())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        for p in &self.params {
            p.value.ensure_finite(&p.name)?;
        }
        Ok(())
    }

    /// Minimum entry over all non-negative-flagged parameters (`+inf` when
    /// none are flagged).
    pub fn nonneg_min(&self) -> f64 {
        self.params.iter().filter(|p| p.nonneg).map(|p| p.value.min()).fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute entry across all parameters.
    pub fn max_abs(&self) -> f64 {
        self.params.iter().map(|p| p.value.max_abs()).fold(0.0, f64::max)
    }
}
