use std::collections::HashMap;

use super::{AutodiffError, Graph, Tensor, Var};

/// Named parameter tensors in insertion order. The position of a tensor is its
/// parameter id, which is also the order gradients are reduced in.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, t: Tensor) -> Result<usize, AutodiffError> {
        if self.index.contains_key(name) {
            return Err(AutodiffError::Invalid {
                op: "params",
                msg: format!("duplicate parameter `{name}`"),
            });
        }
        self.index.insert(name.to_string(), self.names.len());
        self.names.push(name.to_string());
        self.tensors.push(t);
        Ok(self.names.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.id(name).map(|i| &self.tensors[i])
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn tensor_mut(&mut self, id: usize) -> &mut Tensor {
        &mut self.tensors[id]
    }

    /// Total scalar count.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Zero tensors shaped like every parameter.
    pub fn zeros_like(&self) -> Vec<Tensor> {
        self.tensors.iter().map(|t| Tensor::zeros(&t.shape)).collect()
    }

    /// Records parameter `name` as a leaf of `g`.
    pub fn leaf(&self, g: &mut Graph, name: &str) -> Result<Var, AutodiffError> {
        let id = self.id(name).ok_or_else(|| AutodiffError::Invalid {
            op: "params",
            msg: format!("unknown parameter `{name}`"),
        })?;
        Ok(g.param(&self.tensors[id], id))
    }
}
