//! Tensorized probabilistic circuits over categorical variables.
//!
//! A circuit is a list of layers in topological order. Input layers hold
//! `width` categorical distributions over one variable, product layers combine
//! children with disjoint scopes (element-wise or outer product), and sum
//! layers mix the concatenated outputs of their children. The last layer is the
//! root.
//!
//! Parameters are unconstrained reals. Every input row and every sum row is
//! mapped to normalized log-probabilities by log-softmax, so any parameter
//! vector describes a normalized distribution.

use rand::Rng;

use crate::error::{PgcError, Result};
use crate::numeric::{log_sum_exp, log_softmax_into, sample_log_weights};
use crate::regiongraph::RegionNode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductOp {
    /// Unit `u` multiplies unit `u` of every child; all widths are equal.
    Hadamard,
    /// One unit per combination of child units, first child most significant.
    Kronecker,
}

/// Layer description for hand-built circuits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSpec {
    Input { var: usize, width: usize },
    Product { op: ProductOp, children: Vec<usize> },
    Sum { width: usize, children: Vec<usize> },
}

#[derive(Debug, Clone)]
pub enum LayerKind {
    Input {
        var: usize,
    },
    Product {
        op: ProductOp,
        children: Vec<usize>,
    },
    Sum {
        children: Vec<usize>,
        /// Cache position of every input, in concatenation order.
        inputs: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct Layer {
    kind: LayerKind,
    width: usize,
    scope: Vec<usize>,
    value_offset: usize,
    param_offset: usize,
    row_len: usize,
}

impl Layer {
    pub fn kind(&self) -> &LayerKind {
        &self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn children(&self) -> &[usize] {
        match &self.kind {
            LayerKind::Input { .. } => &[],
            LayerKind::Product { children, .. } | LayerKind::Sum { children, .. } => children,
        }
    }

    /// Length of each parameter row (0 for products).
    pub fn row_len(&self) -> usize {
        self.row_len
    }

    fn value_range(&self) -> std::ops::Range<usize> {
        self.value_offset..self.value_offset + self.width
    }
}

#[derive(Debug, Clone)]
pub struct Circuit {
    categories: Vec<usize>,
    layers: Vec<Layer>,
    out_width: usize,
    params: Vec<f64>,
    log_params: Vec<f64>,
    cache_len: usize,
}

/// Per-call evaluation state: every layer's log-values and the evidence.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    values: Vec<f64>,
    active: Vec<bool>,
    inputs: Vec<Option<usize>>,
}

impl ForwardCache {
    pub fn inputs(&self) -> &[Option<usize>] {
        &self.inputs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Smoothness,
    Decomposability,
    RootWidth,
    RootScope,
    Normalization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub layer: usize,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub n_s: usize,
    pub n_i: usize,
    /// Width of the root sum layer.
    pub n_out: usize,
    /// Largest width a Kronecker layer may reach.
    pub max_width: usize,
}

impl CompileOptions {
    pub fn new(n_s: usize, n_i: usize, n_out: usize) -> Self {
        CompileOptions {
            n_s,
            n_i,
            n_out,
            max_width: 4096,
        }
    }
}

pub const INIT_HALF_WIDTH: f64 = 0.01;

impl Circuit {
    /// Builds a circuit from explicit layers; the last layer is the root and
    /// all parameters start at zero (uniform rows).
    pub fn from_layers(categories: Vec<usize>, specs: Vec<LayerSpec>) -> Result<Circuit> {
        Circuit::build(categories, specs, 1)
    }

    fn build(categories: Vec<usize>, specs: Vec<LayerSpec>, out_width: usize) -> Result<Circuit> {
        if specs.is_empty() {
            return Err(PgcError::Structure("circuit has no layers".into()));
        }
        let mut layers: Vec<Layer> = Vec::with_capacity(specs.len());
        let mut value_offset = 0;
        let mut param_offset = 0;
        for (id, spec) in specs.into_iter().enumerate() {
            let (kind, width, scope, row_len) = match spec {
                LayerSpec::Input { var, width } => {
                    let k = *categories.get(var).ok_or_else(|| {
                        PgcError::Structure(format!("layer {id}: no category table for variable {var}"))
                    })?;
                    if k == 0 {
                        return Err(PgcError::Structure(format!(
                            "layer {id}: variable {var} has no categories"
                        )));
                    }
                    (LayerKind::Input { var }, width, vec![var], k)
                }
                LayerSpec::Product { op, children } => {
                    check_children(id, &children, &layers)?;
                    let widths: Vec<usize> = children.iter().map(|&c| layers[c].width).collect();
                    let width = match op {
                        ProductOp::Hadamard => {
                            if widths.iter().any(|&w| w != widths[0]) {
                                return Err(PgcError::Structure(format!(
                                    "layer {id}: hadamard product over unequal widths {widths:?}"
                                )));
                            }
                            widths[0]
                        }
                        ProductOp::Kronecker => widths
                            .iter()
                            .try_fold(1usize, |acc, &w| acc.checked_mul(w))
                            .ok_or_else(|| {
                                PgcError::Structure(format!("layer {id}: kronecker width overflows"))
                            })?,
                    };
                    let scope = union_scope(&children, &layers);
                    (LayerKind::Product { op, children }, width, scope, 0)
                }
                LayerSpec::Sum { width, children } => {
                    check_children(id, &children, &layers)?;
                    let inputs: Vec<usize> = children
                        .iter()
                        .flat_map(|&c| layers[c].value_range())
                        .collect();
                    let scope = union_scope(&children, &layers);
                    let n_in = inputs.len();
                    (LayerKind::Sum { children, inputs }, width, scope, n_in)
                }
            };
            if width == 0 {
                return Err(PgcError::Structure(format!("layer {id} has width 0")));
            }
            layers.push(Layer {
                kind,
                width,
                scope,
                value_offset,
                param_offset,
                row_len,
            });
            value_offset += width;
            param_offset += width * row_len;
        }
        let mut c = Circuit {
            categories,
            layers,
            out_width,
            params: vec![0.0; param_offset],
            log_params: vec![0.0; param_offset],
            cache_len: value_offset,
        };
        c.refresh_log_params();
        Ok(c)
    }

    pub fn num_vars(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[usize] {
        &self.categories
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn root(&self) -> &Layer {
        self.layers.last().expect("circuit has at least one layer")
    }

    pub fn root_width(&self) -> usize {
        self.root().width
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Normalized log-probabilities, row by row, in parameter order.
    pub fn log_params(&self) -> &[f64] {
        &self.log_params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(PgcError::DimensionMismatch(format!(
                "circuit has {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params.copy_from_slice(params);
        self.refresh_log_params();
        Ok(())
    }

    /// Redraws every parameter from `U(-half_width, half_width)`.
    pub fn init_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R, half_width: f64) {
        for p in &mut self.params {
            *p = rng.gen_range(-half_width..=half_width);
        }
        self.refresh_log_params();
    }

    fn refresh_log_params(&mut self) {
        for layer in &self.layers {
            if layer.row_len == 0 {
                continue;
            }
            for r in 0..layer.width {
                let start = layer.param_offset + r * layer.row_len;
                let end = start + layer.row_len;
                log_softmax_into(&self.params[start..end], &mut self.log_params[start..end]);
            }
        }
    }

    /// Positions of one layer's parameters in `params()`.
    pub fn param_range(&self, layer: usize) -> std::ops::Range<usize> {
        let l = &self.layers[layer];
        l.param_offset..l.param_offset + l.width * l.row_len
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    /// Number of unit-to-unit connections.
    pub fn connection_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match &l.kind {
                LayerKind::Input { .. } => 0,
                LayerKind::Product { children, .. } => l.width * children.len(),
                LayerKind::Sum { inputs, .. } => l.width * inputs.len(),
            })
            .sum()
    }

    /// Evaluates every layer in log space. `None` marks a marginalized
    /// variable; its input units evaluate to `ln 1 = 0`.
    pub fn forward(&self, x: &[Option<usize>]) -> Result<ForwardCache> {
        if x.len() != self.num_vars() {
            return Err(PgcError::DimensionMismatch(format!(
                "circuit has {} variables, got {} values",
                self.num_vars(),
                x.len()
            )));
        }
        let mut values = vec![0.0; self.cache_len];
        let mut active = vec![false; self.layers.len()];
        let mut gathered: Vec<f64> = Vec::new();
        for (id, layer) in self.layers.iter().enumerate() {
            let is_active = match &layer.kind {
                LayerKind::Input { var } => x[*var].is_some(),
                _ => layer.children().iter().any(|&c| active[c]),
            };
            active[id] = is_active;
            if !is_active {
                continue;
            }
            let out = layer.value_offset;
            match &layer.kind {
                LayerKind::Input { var } => {
                    let v = x[*var].unwrap_or_default();
                    let k = layer.row_len;
                    if v >= k {
                        return Err(PgcError::LabelOutOfRange(format!(
                            "variable {var} has {k} categories, got {v}"
                        )));
                    }
                    for u in 0..layer.width {
                        values[out + u] = self.log_params[layer.param_offset + u * k + v];
                    }
                }
                LayerKind::Product { op: ProductOp::Hadamard, children } => {
                    for u in 0..layer.width {
                        values[out + u] = children
                            .iter()
                            .map(|&c| values[self.layers[c].value_offset + u])
                            .sum();
                    }
                }
                LayerKind::Product { op: ProductOp::Kronecker, children } => {
                    let mut acc = vec![0.0];
                    for &c in children {
                        let child = &values[self.layers[c].value_range()];
                        acc = acc
                            .iter()
                            .flat_map(|a| child.iter().map(move |b| a + b))
                            .collect();
                    }
                    values[layer.value_range()].copy_from_slice(&acc);
                }
                LayerKind::Sum { inputs, .. } => {
                    gathered.clear();
                    gathered.extend(inputs.iter().map(|&i| values[i]));
                    let n_in = layer.row_len;
                    let mut row = vec![0.0; n_in];
                    for s in 0..layer.width {
                        let w = &self.log_params[layer.param_offset + s * n_in..][..n_in];
                        for k in 0..n_in {
                            row[k] = w[k] + gathered[k];
                        }
                        values[out + s] = log_sum_exp(&row);
                    }
                }
            }
        }
        Ok(ForwardCache {
            values,
            active,
            inputs: x.to_vec(),
        })
    }

    /// Log-values of the root units.
    pub fn root_values<'a>(&self, cache: &'a ForwardCache) -> &'a [f64] {
        &cache.values[self.root().value_range()]
    }

    /// Convenience: forward pass returning the root log-values.
    pub fn evaluate(&self, x: &[Option<usize>]) -> Result<Vec<f64>> {
        let cache = self.forward(x)?;
        Ok(self.root_values(&cache).to_vec())
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        if cache.values.len() != self.cache_len
            || cache.active.len() != self.layers.len()
            || cache.inputs.len() != self.num_vars()
        {
            return Err(PgcError::DimensionMismatch(
                "forward cache does not belong to this circuit".into(),
            ));
        }
        Ok(())
    }

    /// Reverse-mode pass. Adds the gradient of `Σ_u root_grad[u] · root[u]`
    /// with respect to the normalized log-parameters into `grad`. Subcircuits
    /// whose whole scope is marginalized evaluate to the constant 0 and
    /// receive no gradient.
    pub fn backward(&self, cache: &ForwardCache, root_grad: &[f64], grad: &mut [f64]) -> Result<()> {
        self.check_cache(cache)?;
        if root_grad.len() != self.root_width() || grad.len() != self.params.len() {
            return Err(PgcError::DimensionMismatch(
                "gradient buffers do not match the circuit".into(),
            ));
        }
        let mut node_grad = vec![0.0; self.cache_len];
        node_grad[self.root().value_range()].copy_from_slice(root_grad);
        for (id, layer) in self.layers.iter().enumerate().rev() {
            if !cache.active[id] {
                continue;
            }
            let out = layer.value_offset;
            match &layer.kind {
                LayerKind::Input { var } => {
                    let v = cache.inputs[*var].unwrap_or_default();
                    for u in 0..layer.width {
                        grad[layer.param_offset + u * layer.row_len + v] += node_grad[out + u];
                    }
                }
                LayerKind::Product { op: ProductOp::Hadamard, children } => {
                    for &c in children {
                        let co = self.layers[c].value_offset;
                        for u in 0..layer.width {
                            node_grad[co + u] += node_grad[out + u];
                        }
                    }
                }
                LayerKind::Product { op: ProductOp::Kronecker, children } => {
                    for u in 0..layer.width {
                        let g = node_grad[out + u];
                        if g == 0.0 {
                            continue;
                        }
                        let mut rem = u;
                        for &c in children.iter().rev() {
                            let child = &self.layers[c];
                            node_grad[child.value_offset + rem % child.width] += g;
                            rem /= child.width;
                        }
                    }
                }
                LayerKind::Sum { inputs, .. } => {
                    let n_in = layer.row_len;
                    for s in 0..layer.width {
                        let g = node_grad[out + s];
                        let v = cache.values[out + s];
                        if g == 0.0 || v == f64::NEG_INFINITY {
                            continue;
                        }
                        let base = layer.param_offset + s * n_in;
                        for (k, &i) in inputs.iter().enumerate() {
                            let r = (self.log_params[base + k] + cache.values[i] - v).exp();
                            grad[base + k] += g * r;
                            node_grad[i] += g * r;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Chains a gradient with respect to normalized log-parameters through the
    /// row-wise log-softmax, giving the gradient for the raw parameters.
    pub fn raw_gradient(&self, grad_log: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; grad_log.len()];
        self.raw_gradient_into(grad_log, &mut out);
        out
    }

    pub fn raw_gradient_into(&self, grad_log: &[f64], out: &mut [f64]) {
        for layer in &self.layers {
            let n = layer.row_len;
            if n == 0 {
                continue;
            }
            for r in 0..layer.width {
                let start = layer.param_offset + r * n;
                let g = &grad_log[start..start + n];
                let total: f64 = g.iter().sum();
                for k in 0..n {
                    out[start + k] = g[k] - self.log_params[start + k].exp() * total;
                }
            }
        }
    }

    /// Top-down ancestral sampling starting at unit `root_unit` of the root
    /// layer. Without a cache this draws from the circuit's distribution;
    /// with a cache computed on partial evidence it draws from the posterior
    /// and copies the observed values.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        root_unit: usize,
        cache: Option<&ForwardCache>,
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        if let Some(c) = cache {
            self.check_cache(c)?;
        }
        if root_unit >= self.root_width() {
            return Err(PgcError::invalid(format!(
                "root unit {root_unit} out of range for width {}",
                self.root_width()
            )));
        }
        let mut out: Vec<Option<usize>> = vec![None; self.num_vars()];
        let mut stack = vec![(self.layers.len() - 1, root_unit)];
        let mut weights: Vec<f64> = Vec::new();
        while let Some((id, unit)) = stack.pop() {
            let layer = &self.layers[id];
            match &layer.kind {
                LayerKind::Input { var } => {
                    let observed = cache.and_then(|c| c.inputs[*var]);
                    let v = match observed {
                        Some(v) => v,
                        None => {
                            let start = layer.param_offset + unit * layer.row_len;
                            sample_log_weights(&self.log_params[start..start + layer.row_len], rng)
                        }
                    };
                    out[*var] = Some(v);
                }
                LayerKind::Product { op, children } => match op {
                    ProductOp::Hadamard => stack.extend(children.iter().map(|&c| (c, unit))),
                    ProductOp::Kronecker => {
                        let mut rem = unit;
                        for &c in children.iter().rev() {
                            let w = self.layers[c].width;
                            stack.push((c, rem % w));
                            rem /= w;
                        }
                    }
                },
                LayerKind::Sum { children, inputs } => {
                    let n_in = layer.row_len;
                    let base = layer.param_offset + unit * n_in;
                    weights.clear();
                    weights.extend(inputs.iter().enumerate().map(|(k, &i)| {
                        self.log_params[base + k] + cache.map_or(0.0, |c| c.values[i])
                    }));
                    let mut k = sample_log_weights(&weights, rng);
                    for &c in children {
                        let w = self.layers[c].width;
                        if k < w {
                            stack.push((c, k));
                            break;
                        }
                        k -= w;
                    }
                }
            }
        }
        out.into_iter()
            .enumerate()
            .map(|(v, x)| {
                x.ok_or_else(|| PgcError::Structure(format!("sampling never reached variable {v}")))
            })
            .collect()
    }

    /// Smoothness, decomposability, root shape and row normalization.
    pub fn check_structure(&self) -> Vec<Violation> {
        let mut found = Vec::new();
        for (id, layer) in self.layers.iter().enumerate() {
            match &layer.kind {
                LayerKind::Input { .. } => {}
                LayerKind::Sum { children, .. } => {
                    let first = &self.layers[children[0]].scope;
                    for &c in &children[1..] {
                        if &self.layers[c].scope != first {
                            found.push(Violation {
                                layer: id,
                                kind: ViolationKind::Smoothness,
                                detail: format!(
                                    "inputs {} and {} have scopes {:?} and {:?}",
                                    children[0], c, first, self.layers[c].scope
                                ),
                            });
                        }
                    }
                }
                LayerKind::Product { children, .. } => {
                    let total: usize = children.iter().map(|&c| self.layers[c].scope.len()).sum();
                    if total != layer.scope.len() {
                        found.push(Violation {
                            layer: id,
                            kind: ViolationKind::Decomposability,
                            detail: format!("children {children:?} have overlapping scopes"),
                        });
                    }
                }
            }
            if layer.row_len > 0 {
                for r in 0..layer.width {
                    let start = layer.param_offset + r * layer.row_len;
                    let z = log_sum_exp(&self.log_params[start..start + layer.row_len]);
                    if !(z.abs() <= 1e-9) {
                        found.push(Violation {
                            layer: id,
                            kind: ViolationKind::Normalization,
                            detail: format!("row {r} log-normalizes to {z}"),
                        });
                    }
                }
            }
        }
        let root_id = self.layers.len() - 1;
        let root = self.root();
        if !matches!(root.kind, LayerKind::Sum { .. }) || root.width != self.out_width {
            found.push(Violation {
                layer: root_id,
                kind: ViolationKind::RootWidth,
                detail: format!(
                    "root must be a sum layer of width {}, found width {}",
                    self.out_width, root.width
                ),
            });
        }
        if root.scope != (0..self.num_vars()).collect::<Vec<_>>() {
            found.push(Violation {
                layer: root_id,
                kind: ViolationKind::RootScope,
                detail: format!("root scope {:?} is not the full variable set", root.scope),
            });
        }
        found
    }
}

fn check_children(id: usize, children: &[usize], layers: &[Layer]) -> Result<()> {
    if children.is_empty() {
        return Err(PgcError::Structure(format!("layer {id} has no children")));
    }
    if let Some(&c) = children.iter().find(|&&c| c >= layers.len()) {
        return Err(PgcError::Structure(format!(
            "layer {id} refers to layer {c}, which does not precede it"
        )));
    }
    Ok(())
}

fn union_scope(children: &[usize], layers: &[Layer]) -> Vec<usize> {
    let mut scope: Vec<usize> = children
        .iter()
        .flat_map(|&c| layers[c].scope.iter().copied())
        .collect();
    scope.sort_unstable();
    scope.dedup();
    scope
}

struct Compiler<'a> {
    opts: &'a CompileOptions,
    specs: Vec<LayerSpec>,
    widths: Vec<usize>,
}

impl Compiler<'_> {
    fn push(&mut self, spec: LayerSpec, width: usize) -> usize {
        self.specs.push(spec);
        self.widths.push(width);
        self.specs.len() - 1
    }

    fn region(&mut self, node: &RegionNode, width: usize) -> Result<usize> {
        if node.is_leaf() {
            let var = node.scope[0];
            return Ok(self.push(
                LayerSpec::Input {
                    var,
                    width: self.opts.n_i,
                },
                self.opts.n_i,
            ));
        }
        let mut products = Vec::with_capacity(node.children.len());
        for p in &node.children {
            products.push(self.partition(p)?);
        }
        Ok(self.push(
            LayerSpec::Sum {
                width,
                children: products,
            },
            width,
        ))
    }

    fn partition(&mut self, node: &RegionNode) -> Result<usize> {
        let mut children = Vec::with_capacity(node.children.len());
        for r in &node.children {
            children.push(self.region(r, self.opts.n_s)?);
        }
        let widths: Vec<usize> = children.iter().map(|&c| self.widths[c]).collect();
        if widths.iter().all(|&w| w == widths[0]) {
            return Ok(self.push(
                LayerSpec::Product {
                    op: ProductOp::Hadamard,
                    children,
                },
                widths[0],
            ));
        }
        let width = widths.iter().try_fold(1usize, |acc, &w| acc.checked_mul(w));
        match width {
            Some(w) if w <= self.opts.max_width => Ok(self.push(
                LayerSpec::Product {
                    op: ProductOp::Kronecker,
                    children,
                },
                w,
            )),
            _ => Err(PgcError::Config(format!(
                "kronecker product over scope {:?} needs width {} = {}, above the cap {}",
                node.scope,
                widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("x"),
                widths.iter().map(|&w| w as u128).product::<u128>(),
                self.opts.max_width
            ))),
        }
    }
}

/// Compiles region trees into a circuit. Leaf regions become input layers of
/// width `n_i`, partitions become product layers, other regions become sum
/// layers of width `n_s`, and each root becomes a sum of width `n_out`.
/// Several roots are mixed by one more sum of width `n_out`. Parameters are
/// drawn from `U(-0.01, 0.01)`.
pub fn compile<R: Rng + ?Sized>(
    roots: &[RegionNode],
    categories: &[usize],
    opts: &CompileOptions,
    rng: &mut R,
) -> Result<Circuit> {
    if roots.is_empty() {
        return Err(PgcError::Structure("no region roots to compile".into()));
    }
    if opts.n_s == 0 || opts.n_i == 0 || opts.n_out == 0 {
        return Err(PgcError::Config("layer widths must be positive".into()));
    }
    let full: Vec<usize> = (0..categories.len()).collect();
    for root in roots {
        root.validate()?;
        if root.scope != full {
            return Err(PgcError::Structure(format!(
                "region root covers {:?}, but categories are given for {} variables",
                root.scope,
                categories.len()
            )));
        }
    }
    let mut compiler = Compiler {
        opts,
        specs: Vec::new(),
        widths: Vec::new(),
    };
    let mut tops = Vec::with_capacity(roots.len());
    for root in roots {
        let mut id = compiler.region(root, opts.n_out)?;
        if root.is_leaf() {
            id = compiler.push(
                LayerSpec::Sum {
                    width: opts.n_out,
                    children: vec![id],
                },
                opts.n_out,
            );
        }
        tops.push(id);
    }
    if tops.len() > 1 {
        compiler.push(
            LayerSpec::Sum {
                width: opts.n_out,
                children: tops,
            },
            opts.n_out,
        );
    }
    let mut circuit = Circuit::build(categories.to_vec(), compiler.specs, opts.n_out)?;
    circuit.init_uniform(rng, INIT_HALF_WIDTH);
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regiongraph::{build_bt, build_lt, build_rt};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(17)
    }

    #[test]
    fn compile_examples() {
        let one = compile(&[build_bt(&[0], 1).unwrap()], &[2], &CompileOptions::new(1, 1, 1), &mut rng()).unwrap();
        assert_eq!(one.layers().len(), 2);
        assert!(matches!(one.layers()[0].kind(), LayerKind::Input { var: 0 }));
        assert_eq!(one.layers()[0].width(), 1);
        assert_eq!(one.root_width(), 1);

        let lt = compile(&[build_lt(&[0, 1], 2).unwrap()], &[2, 2], &CompileOptions::new(2, 2, 1), &mut rng()).unwrap();
        let kinds: Vec<&str> = lt
            .layers()
            .iter()
            .map(|l| match l.kind() {
                LayerKind::Input { .. } => "input",
                LayerKind::Product { .. } => "product",
                LayerKind::Sum { .. } => "sum",
            })
            .collect();
        assert_eq!(kinds, ["input", "input", "product", "sum"]);

        let roots = build_rt(&[0, 1, 2, 3], 2, 2, 5).unwrap();
        let rt = compile(&roots, &[2; 4], &CompileOptions::new(3, 2, 1), &mut rng()).unwrap();
        assert_eq!(rt.root().row_len(), 2);
        for c in [&one, &lt, &rt] {
            assert!(c.check_structure().is_empty());
        }
    }

    #[test]
    fn compile_errors() {
        let root = build_bt(&[0, 1, 2], 2).unwrap();
        assert!(compile(std::slice::from_ref(&root), &[2, 2], &CompileOptions::new(2, 2, 1), &mut rng()).is_err());
        let mut opts = CompileOptions::new(3, 2, 1);
        opts.max_width = 4;
        assert!(matches!(compile(&[root], &[2; 3], &opts, &mut rng()), Err(PgcError::Config(_))));
    }

    #[test]
    fn forward_examples() {
        let c = compile(&[build_bt(&[0, 1, 2, 3], 3).unwrap()], &[3, 2, 4, 2], &CompileOptions::new(3, 2, 1), &mut rng()).unwrap();
        assert_eq!(c.evaluate(&[None; 4]).unwrap(), vec![0.0]);
        assert!(matches!(c.evaluate(&[Some(3), None, None, None]), Err(PgcError::LabelOutOfRange(_))));

        let mut single = Circuit::from_layers(
            vec![2],
            vec![
                LayerSpec::Input { var: 0, width: 1 },
                LayerSpec::Sum { width: 1, children: vec![0] },
            ],
        )
        .unwrap();
        single.set_params(&[0.25f64.ln(), 0.75f64.ln(), 0.0]).unwrap();
        assert!((single.evaluate(&[Some(1)]).unwrap()[0] - 0.75f64.ln()).abs() < 1e-15);

        let pair = Circuit::from_layers(
            vec![2, 2],
            vec![
                LayerSpec::Input { var: 0, width: 1 },
                LayerSpec::Input { var: 1, width: 1 },
                LayerSpec::Product { op: ProductOp::Hadamard, children: vec![0, 1] },
                LayerSpec::Sum { width: 1, children: vec![2] },
            ],
        )
        .unwrap();
        assert!((pair.evaluate(&[Some(0), Some(1)]).unwrap()[0] - 0.25f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn backward_examples() {
        let single = Circuit::from_layers(
            vec![3],
            vec![
                LayerSpec::Input { var: 0, width: 1 },
                LayerSpec::Sum { width: 1, children: vec![0] },
            ],
        )
        .unwrap();
        let cache = single.forward(&[Some(2)]).unwrap();
        let mut g = vec![0.0; single.parameter_count()];
        single.backward(&cache, &[1.0], &mut g).unwrap();
        assert_eq!(&g[..3], &[0.0, 0.0, 1.0]);

        let c = compile(&[build_bt(&[0, 1, 2], 2).unwrap()], &[2; 3], &CompileOptions::new(2, 2, 1), &mut rng()).unwrap();
        let cache = c.forward(&[None; 3]).unwrap();
        let mut g = vec![0.0; c.parameter_count()];
        c.backward(&cache, &[1.0], &mut g).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));

        let other = c.forward(&[Some(0), None, Some(1)]).unwrap();
        assert!(single.backward(&other, &[1.0], &mut [0.0; 4]).is_err());
    }

    #[test]
    fn deterministic_circuit_samples_its_assignment() {
        let mut c = Circuit::from_layers(
            vec![3, 2],
            vec![
                LayerSpec::Input { var: 0, width: 1 },
                LayerSpec::Input { var: 1, width: 1 },
                LayerSpec::Product { op: ProductOp::Kronecker, children: vec![0, 1] },
                LayerSpec::Sum { width: 1, children: vec![2] },
            ],
        )
        .unwrap();
        c.set_params(&[-800.0, -800.0, 0.0, 0.0, -800.0, 0.0]).unwrap();
        let mut r = rng();
        for _ in 0..1000 {
            assert_eq!(c.sample(0, None, &mut r).unwrap(), vec![2, 0]);
        }
    }

    #[test]
    fn uniform_binary_frequency() {
        let c = Circuit::from_layers(
            vec![2],
            vec![
                LayerSpec::Input { var: 0, width: 1 },
                LayerSpec::Sum { width: 1, children: vec![0] },
            ],
        )
        .unwrap();
        let mut r = rng();
        let zeros = (0..1_000_000).filter(|_| c.sample(0, None, &mut r).unwrap()[0] == 0).count();
        assert!((zeros as f64 / 1e6 - 0.5).abs() <= 0.002);
    }

    #[test]
    fn check_structure_flags_violations() {
        let non_smooth = Circuit::from_layers(
            vec![2, 2],
            vec![
                LayerSpec::Input { var: 0, width: 1 },
                LayerSpec::Input { var: 1, width: 1 },
                LayerSpec::Sum { width: 1, children: vec![0, 1] },
            ],
        )
        .unwrap();
        let v = non_smooth.check_structure();
        assert!(v.iter().any(|x| x.kind == ViolationKind::Smoothness && x.layer == 2));

        let overlapping = Circuit::from_layers(
            vec![2],
            vec![
                LayerSpec::Input { var: 0, width: 1 },
                LayerSpec::Input { var: 0, width: 1 },
                LayerSpec::Product { op: ProductOp::Hadamard, children: vec![0, 1] },
                LayerSpec::Sum { width: 1, children: vec![2] },
            ],
        )
        .unwrap();
        let v = overlapping.check_structure();
        assert!(v.iter().any(|x| x.kind == ViolationKind::Decomposability && x.layer == 2));

        let wide_root = Circuit::from_layers(
            vec![2],
            vec![
                LayerSpec::Input { var: 0, width: 1 },
                LayerSpec::Sum { width: 2, children: vec![0] },
            ],
        )
        .unwrap();
        assert!(wide_root.check_structure().iter().any(|x| x.kind == ViolationKind::RootWidth));
    }

    #[test]
    fn parameter_and_connection_counts() {
        let c = compile(&[build_lt(&[0, 1], 2).unwrap()], &[3, 2], &CompileOptions::new(4, 2, 1), &mut rng()).unwrap();
        // inputs 2x3 + 2x2, root sum 1x2
        assert_eq!(c.parameter_count(), 6 + 4 + 2);
        assert_eq!(c.connection_count(), 2 * 2 + 2);
    }
}
