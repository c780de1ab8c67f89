use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::MaterialLibrary;

/// Minimum resolution accepted by the mesher.
pub const MIN_ELEMENTS_PER_WAVELENGTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Free,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub material: String,
    /// Thickness in metres.
    pub thickness: f64,
}

/// Ordered layers from z = 0 upwards. The first layer sits at the bottom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub layers: Vec<Layer>,
    pub bottom: Boundary,
    pub top: Boundary,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>, bottom: Boundary, top: Boundary) -> Result<Self> {
        let stack = Self { layers, bottom, top };
        stack.validate()?;
        Ok(stack)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid("layer stack has no layers"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.thickness > 0.0) || !l.thickness.is_finite() {
                return Err(Error::config(
                    format!("stack.layers[{i}].thickness"),
                    format!("thickness must be positive, got {}", l.thickness),
                ));
            }
        }
        Ok(())
    }

    pub fn height(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    /// z-coordinates of the layer interfaces including both ends.
    pub fn interfaces(&self) -> Vec<f64> {
        let mut z = vec![0.0];
        for l in &self.layers {
            z.push(z.last().unwrap() + l.thickness);
        }
        z
    }
}

/// Linear-element mesh of a layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    /// Node coordinates in metres, strictly increasing.
    pub nodes: Vec<f64>,
    /// Layer index of every element.
    pub element_layer: Vec<usize>,
    /// Material name per layer.
    pub layer_materials: Vec<String>,
    pub bottom: Boundary,
    pub top: Boundary,
}

impl Mesh1D {
    pub fn element_count(&self) -> usize {
        self.element_layer.len()
    }

    pub fn element_length(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn element_material(&self, e: usize) -> &str {
        &self.layer_materials[self.element_layer[e]]
    }

    /// Splits every element in two.
    pub fn refined(&self) -> Mesh1D {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len());
        let mut element_layer = Vec::with_capacity(2 * self.element_layer.len());
        for e in 0..self.element_count() {
            nodes.push(self.nodes[e]);
            nodes.push(0.5 * (self.nodes[e] + self.nodes[e + 1]));
            element_layer.push(self.element_layer[e]);
            element_layer.push(self.element_layer[e]);
        }
        nodes.push(*self.nodes.last().unwrap());
        Mesh1D { nodes, element_layer, layer_materials: self.layer_materials.clone(), ..*self }
    }

    /// Smallest number of elements per longitudinal wavelength over all layers.
    pub fn elements_per_wavelength(&self, lib: &MaterialLibrary, frequency: f64) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for e in 0..self.element_count() {
            let lambda = lib.get(self.element_material(e))?.longitudinal_velocity() / frequency;
            worst = worst.min(lambda / self.element_length(e));
        }
        Ok(worst)
    }
}

/// Meshes each layer with `ceil(n·t/λ)` equal elements, λ = √(c33/ρ)/f.
pub fn build_mesh(
    stack: &LayerStack,
    lib: &MaterialLibrary,
    target_freq: f64,
    elements_per_wavelength: usize,
) -> Result<Mesh1D> {
    if elements_per_wavelength < MIN_ELEMENTS_PER_WAVELENGTH {
        return Err(Error::UnderResolvedMesh(elements_per_wavelength));
    }
    if !(target_freq > 0.0) {
        return Err(Error::invalid(format!("target frequency must be positive, got {target_freq}")));
    }
    stack.validate()?;
    let mut nodes = vec![0.0];
    let mut element_layer = Vec::new();
    let mut z0 = 0.0;
    for (li, layer) in stack.layers.iter().enumerate() {
        let mat = lib.get(&layer.material)?;
        let lambda = mat.longitudinal_velocity() / target_freq;
        let n = ((elements_per_wavelength as f64 * layer.thickness / lambda).ceil() as usize).max(1);
        let z1 = z0 + layer.thickness;
        for k in 1..=n {
            // Last node of the layer is set exactly to the interface.
            nodes.push(if k == n { z1 } else { z0 + layer.thickness * k as f64 / n as f64 });
            element_layer.push(li);
        }
        z0 = z1;
    }
    Ok(Mesh1D {
        nodes,
        element_layer,
        layer_materials: stack.layers.iter().map(|l| l.material.clone()).collect(),
        bottom: stack.bottom,
        top: stack.top,
    })
}
