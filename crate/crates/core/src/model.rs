//! Gradient-boosted decision trees and a logistic-regression baseline,
//! both trained on sparse count vectors with binary labels.
//!
//! Boosting minimizes logistic loss with second-order leaf weights: at each
//! round, gradients `g = p - y` and hessians `h = p (1 - p)` are computed
//! from the current margin, a depth-limited tree is grown by exact greedy
//! split search (gain `0.5 (GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l))`), and
//! leaves contribute `-G/(H+l)` scaled by the learning rate. Split ties
//! resolve to the lowest feature index, then the lowest threshold, so
//! training is deterministic for a fixed dataset.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::corpus::Label;
use crate::features::FeatureVector;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("row width {got} does not match expected width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("feature values must be finite")]
    NonFiniteFeature,
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("model file line {line}: {message}")]
    BadFormat { line: usize, message: String },
    #[error("unsupported model format `{0}`")]
    UnsupportedFormat(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Boosting hyperparameters. The defaults are the reference settings used
/// throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub min_child_weight: f64,
    /// Recorded for provenance; the exact greedy algorithm draws no random
    /// numbers.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            rounds: 100,
            max_depth: 3,
            learning_rate: 0.3,
            l2_lambda: 1.0,
            min_child_weight: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), ModelError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::BadConfig(
                "learning_rate must be positive and finite".into(),
            ));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(ModelError::BadConfig(
                "l2_lambda must be nonnegative and finite".into(),
            ));
        }
        if !(self.min_child_weight >= 0.0 && self.min_child_weight.is_finite()) {
            return Err(ModelError::BadConfig(
                "min_child_weight must be nonnegative and finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] < threshold` descend to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &FeatureVector) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row.value(*feature) < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }
}

/// Boosted-tree classifier. `base_score` is a raw margin added before the
/// trees, zero by default, so an empty ensemble predicts one half.
#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    pub config: TrainConfig,
    pub width: usize,
    pub base_score: f64,
    pub trees: Vec<Tree>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss with probabilities clamped away from 0 and 1.
pub fn log_loss(labels: &[Label], probs: &[f64]) -> f64 {
    assert_eq!(labels.len(), probs.len());
    let n = labels.len() as f64;
    labels
        .iter()
        .zip(probs)
        .map(|(y, p)| {
            let p = p.clamp(1e-15, 1.0 - 1e-15);
            if y.is_stereotypical() {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n
}

fn check_dataset(rows: &[FeatureVector], labels: &[Label]) -> Result<usize, ModelError> {
    if rows.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if rows.len() != labels.len() {
        return Err(ModelError::LengthMismatch {
            rows: rows.len(),
            labels: labels.len(),
        });
    }
    let width = rows[0].width;
    for row in rows {
        if row.width != width {
            return Err(ModelError::WidthMismatch {
                expected: width,
                got: row.width,
            });
        }
        for (c, v) in &row.entries {
            if *c >= width {
                return Err(ModelError::WidthMismatch {
                    expected: width,
                    got: *c + 1,
                });
            }
            if !v.is_finite() {
                return Err(ModelError::NonFiniteFeature);
            }
        }
    }
    Ok(width)
}

/// Per-feature nonzero entries sorted by value, shared across rounds.
struct ColumnStore {
    columns: Vec<Vec<(usize, f64)>>,
}

impl ColumnStore {
    fn build(rows: &[FeatureVector], width: usize) -> ColumnStore {
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); width];
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in &row.entries {
                if *v != 0.0 {
                    columns[*c].push((r, *v));
                }
            }
        }
        for column in &mut columns {
            column.sort_unstable_by(|a, b| {
                a.1.partial_cmp(&b.1)
                    .expect("feature values are finite")
                    .then(a.0.cmp(&b.0))
            });
        }
        ColumnStore { columns }
    }
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct TreeBuilder<'a> {
    rows: &'a [FeatureVector],
    columns: &'a ColumnStore,
    grad: &'a [f64],
    hess: &'a [f64],
    config: &'a TrainConfig,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn build(mut self, all_rows: Vec<usize>) -> Tree {
        self.grow(all_rows, 0);
        Tree { nodes: self.nodes }
    }

    /// Appends the subtree for `members` and returns its root index.
    fn grow(&mut self, members: Vec<usize>, depth: usize) -> usize {
        let g_total: f64 = members.iter().map(|&r| self.grad[r]).sum();
        let h_total: f64 = members.iter().map(|&r| self.hess[r]).sum();
        let leaf = |nodes: &mut Vec<Node>| {
            let value = -g_total / (h_total + self.config.l2_lambda) * self.config.learning_rate;
            nodes.push(Node::Leaf { value });
            nodes.len() - 1
        };
        if depth >= self.config.max_depth || members.len() < 2 {
            return leaf(&mut self.nodes);
        }
        let best = self.best_split(&members, g_total, h_total);
        let Some(best) = best else {
            return leaf(&mut self.nodes);
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = members
            .into_iter()
            .partition(|&r| self.rows[r].value(best.feature) < best.threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        slot
    }

    fn best_split(&self, members: &[usize], g_total: f64, h_total: f64) -> Option<BestSplit> {
        let lambda = self.config.l2_lambda;
        let parent_score = g_total * g_total / (h_total + lambda);
        let mut mask = vec![false; self.rows.len()];
        for &r in members {
            mask[r] = true;
        }
        let mut best: Option<BestSplit> = None;
        // (value, grad sum, hess sum) per distinct value, ascending, with
        // the implicit-zero rows folded in at value 0.
        let mut groups: Vec<(f64, f64, f64)> = Vec::new();
        for (feature, column) in self.columns.columns.iter().enumerate() {
            groups.clear();
            let mut nnz = 0usize;
            let mut g_nonzero = 0.0;
            let mut h_nonzero = 0.0;
            for &(row, value) in column {
                if !mask[row] {
                    continue;
                }
                nnz += 1;
                g_nonzero += self.grad[row];
                h_nonzero += self.hess[row];
                match groups.last_mut() {
                    Some(last) if last.0 == value => {
                        last.1 += self.grad[row];
                        last.2 += self.hess[row];
                    }
                    _ => groups.push((value, self.grad[row], self.hess[row])),
                }
            }
            if nnz < members.len() {
                let zero = (0.0, g_total - g_nonzero, h_total - h_nonzero);
                let at = groups.partition_point(|(v, _, _)| *v < 0.0);
                groups.insert(at, zero);
            }
            if groups.len() < 2 {
                continue;
            }
            let mut g_left = 0.0;
            let mut h_left = 0.0;
            for pair in 0..groups.len() - 1 {
                g_left += groups[pair].1;
                h_left += groups[pair].2;
                let g_right = g_total - g_left;
                let h_right = h_total - h_left;
                if h_left < self.config.min_child_weight || h_right < self.config.min_child_weight {
                    continue;
                }
                let threshold = (groups[pair].0 + groups[pair + 1].0) / 2.0;
                if threshold <= groups[pair].0 {
                    continue;
                }
                let gain = 0.5
                    * (g_left * g_left / (h_left + lambda)
                        + g_right * g_right / (h_right + lambda)
                        - parent_score);
                if gain > best.as_ref().map_or(0.0, |b| b.gain) {
                    best = Some(BestSplit {
                        gain,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best
    }
}

impl GbdtModel {
    pub fn train(
        rows: &[FeatureVector],
        labels: &[Label],
        config: TrainConfig,
    ) -> Result<GbdtModel, ModelError> {
        Ok(Self::train_traced(rows, labels, config)?.0)
    }

    /// Trains and also returns the mean training loss recorded after each
    /// round.
    pub fn train_traced(
        rows: &[FeatureVector],
        labels: &[Label],
        config: TrainConfig,
    ) -> Result<(GbdtModel, Vec<f64>), ModelError> {
        config.validate()?;
        let width = check_dataset(rows, labels)?;
        let columns = ColumnStore::build(rows, width);
        let y: Vec<f64> = labels.iter().map(|l| f64::from(l.bit())).collect();
        let n = rows.len();
        let base_score = 0.0;
        let mut margins = vec![base_score; n];
        let mut trees = Vec::with_capacity(config.rounds);
        let mut losses = Vec::with_capacity(config.rounds);
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for _ in 0..config.rounds {
            for i in 0..n {
                let p = sigmoid(margins[i]);
                grad[i] = p - y[i];
                hess[i] = p * (1.0 - p);
            }
            let tree = TreeBuilder {
                rows,
                columns: &columns,
                grad: &grad,
                hess: &hess,
                config: &config,
                nodes: Vec::new(),
            }
            .build((0..n).collect());
            for (i, row) in rows.iter().enumerate() {
                margins[i] += tree.predict(row);
            }
            trees.push(tree);
            let probs: Vec<f64> = margins.iter().map(|&m| sigmoid(m)).collect();
            losses.push(log_loss(labels, &probs));
        }
        Ok((
            GbdtModel {
                config,
                width,
                base_score,
                trees,
            },
            losses,
        ))
    }

    pub fn predict_margin(&self, row: &FeatureVector) -> Result<f64, ModelError> {
        if row.width != self.width {
            return Err(ModelError::WidthMismatch {
                expected: self.width,
                got: row.width,
            });
        }
        Ok(self.base_score + self.trees.iter().map(|t| t.predict(row)).sum::<f64>())
    }

    pub fn predict_proba(&self, row: &FeatureVector) -> Result<f64, ModelError> {
        Ok(sigmoid(self.predict_margin(row)?))
    }

    /// Versioned plain-text dump; floats print in shortest round-trip form.
    pub fn to_model_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{GBDT_FORMAT}");
        let _ = writeln!(out, "width {}", self.width);
        let _ = writeln!(out, "base_score {}", self.base_score);
        let _ = writeln!(out, "rounds {}", self.config.rounds);
        let _ = writeln!(out, "max_depth {}", self.config.max_depth);
        let _ = writeln!(out, "learning_rate {}", self.config.learning_rate);
        let _ = writeln!(out, "l2_lambda {}", self.config.l2_lambda);
        let _ = writeln!(out, "min_child_weight {}", self.config.min_child_weight);
        let _ = writeln!(out, "seed {}", self.config.seed);
        let _ = writeln!(out, "trees {}", self.trees.len());
        for (t, tree) in self.trees.iter().enumerate() {
            let _ = writeln!(out, "tree {t} nodes {}", tree.nodes.len());
            for (i, node) in tree.nodes.iter().enumerate() {
                match node {
                    Node::Leaf { value } => {
                        let _ = writeln!(out, "node {i} leaf value {value}");
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let _ = writeln!(
                            out,
                            "node {i} split feature {feature} threshold {threshold} left {left} right {right}"
                        );
                    }
                }
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<GbdtModel, ModelError> {
        let mut reader = LineReader::new(text);
        let header = reader.next_line()?;
        if header != GBDT_FORMAT {
            return Err(ModelError::UnsupportedFormat(header.to_owned()));
        }
        let width: usize = reader.kv("width")?;
        let base_score: f64 = reader.kv("base_score")?;
        let rounds: usize = reader.kv("rounds")?;
        let max_depth: usize = reader.kv("max_depth")?;
        let learning_rate: f64 = reader.kv("learning_rate")?;
        let l2_lambda: f64 = reader.kv("l2_lambda")?;
        let min_child_weight: f64 = reader.kv("min_child_weight")?;
        let seed: u64 = reader.kv("seed")?;
        let tree_count: usize = reader.kv("trees")?;
        let mut trees = Vec::with_capacity(tree_count);
        for t in 0..tree_count {
            let line = reader.next_line()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let node_count = match parts.as_slice() {
                ["tree", idx, "nodes", n] if idx.parse() == Ok(t) => n
                    .parse::<usize>()
                    .map_err(|_| reader.error("bad node count"))?,
                _ => return Err(reader.error("expected `tree <i> nodes <n>`")),
            };
            let mut nodes = Vec::with_capacity(node_count);
            for i in 0..node_count {
                let line = reader.next_line()?;
                let parts: Vec<&str> = line.split_whitespace().collect();
                let node = match parts.as_slice() {
                    ["node", idx, "leaf", "value", value] if idx.parse() == Ok(i) => Node::Leaf {
                        value: value.parse().map_err(|_| reader.error("bad leaf value"))?,
                    },
                    ["node", idx, "split", "feature", feature, "threshold", threshold, "left", left, "right", right]
                        if idx.parse() == Ok(i) =>
                    {
                        Node::Split {
                            feature: feature
                                .parse()
                                .map_err(|_| reader.error("bad feature index"))?,
                            threshold: threshold
                                .parse()
                                .map_err(|_| reader.error("bad threshold"))?,
                            left: left.parse().map_err(|_| reader.error("bad left index"))?,
                            right: right.parse().map_err(|_| reader.error("bad right index"))?,
                        }
                    }
                    _ => return Err(reader.error("expected a `node` line")),
                };
                nodes.push(node);
            }
            validate_tree(&nodes, &mut reader)?;
            trees.push(Tree { nodes });
        }
        let footer = reader.next_line()?;
        if footer != "end" {
            return Err(reader.error("expected `end`"));
        }
        Ok(GbdtModel {
            config: TrainConfig {
                rounds,
                max_depth,
                learning_rate,
                l2_lambda,
                min_child_weight,
                seed,
            },
            width,
            base_score,
            trees,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_model_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<GbdtModel, ModelError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn validate_tree(nodes: &[Node], reader: &mut LineReader) -> Result<(), ModelError> {
    if nodes.is_empty() {
        return Err(reader.error("tree has no nodes"));
    }
    for node in nodes {
        if let Node::Split {
            left,
            right,
            threshold,
            ..
        } = node
        {
            if *left >= nodes.len() || *right >= nodes.len() {
                return Err(reader.error("child index out of range"));
            }
            if !threshold.is_finite() {
                return Err(reader.error("threshold must be finite"));
            }
        }
    }
    Ok(())
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> LineReader<'a> {
    fn new(text: &'a str) -> Self {
        LineReader {
            lines: text.lines(),
            line_no: 0,
        }
    }

    fn next_line(&mut self) -> Result<&'a str, ModelError> {
        loop {
            let line = self.lines.next().ok_or(ModelError::BadFormat {
                line: self.line_no + 1,
                message: "unexpected end of file".into(),
            })?;
            self.line_no += 1;
            if !line.trim().is_empty() {
                return Ok(line.trim());
            }
        }
    }

    fn error(&self, message: &str) -> ModelError {
        ModelError::BadFormat {
            line: self.line_no,
            message: message.to_owned(),
        }
    }

    fn kv<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ModelError> {
        let line = self.next_line()?;
        let (k, v) = line
            .split_once(' ')
            .ok_or_else(|| self.error("expected `key value`"))?;
        if k != key {
            return Err(self.error(&format!("expected key `{key}`, found `{k}`")));
        }
        v.trim()
            .parse()
            .map_err(|_| self.error(&format!("bad value for `{key}`")))
    }
}

/// Batch gradient-descent settings for the logistic baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            iterations: 200,
            learning_rate: 1.0,
            l2_lambda: 0.0,
        }
    }
}

/// Linear logistic classifier over the same feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogRegModel {
    /// Full-batch gradient descent with backtracking halving: a step that
    /// does not reduce the penalized loss is retried at half the rate.
    /// Deterministic; starts from the zero vector.
    pub fn train(
        rows: &[FeatureVector],
        labels: &[Label],
        config: LogRegConfig,
    ) -> Result<LogRegModel, ModelError> {
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
            return Err(ModelError::BadConfig(
                "learning_rate must be positive and finite".into(),
            ));
        }
        if !(config.l2_lambda >= 0.0 && config.l2_lambda.is_finite()) {
            return Err(ModelError::BadConfig(
                "l2_lambda must be nonnegative and finite".into(),
            ));
        }
        let width = check_dataset(rows, labels)?;
        let y: Vec<f64> = labels.iter().map(|l| f64::from(l.bit())).collect();
        let n = rows.len() as f64;
        let penalized_loss = |w: &[f64], b: f64| -> f64 {
            let probs: Vec<f64> = rows.iter().map(|r| sigmoid(dot(w, r) + b)).collect();
            let l2: f64 = w.iter().map(|x| x * x).sum::<f64>() * config.l2_lambda / 2.0;
            log_loss(labels, &probs) + l2
        };
        let mut weights = vec![0.0; width];
        let mut bias = 0.0;
        let mut loss = penalized_loss(&weights, bias);
        for _ in 0..config.iterations {
            let mut grad_w = vec![0.0; width];
            let mut grad_b = 0.0;
            for (i, row) in rows.iter().enumerate() {
                let err = sigmoid(dot(&weights, row) + bias) - y[i];
                for (c, v) in &row.entries {
                    grad_w[*c] += err * v;
                }
                grad_b += err;
            }
            for (c, g) in grad_w.iter_mut().enumerate() {
                *g = *g / n + config.l2_lambda * weights[c];
            }
            grad_b /= n;

            let mut step = config.learning_rate;
            let mut accepted = false;
            for _ in 0..40 {
                let trial_w: Vec<f64> = weights
                    .iter()
                    .zip(&grad_w)
                    .map(|(w, g)| w - step * g)
                    .collect();
                let trial_b = bias - step * grad_b;
                let trial_loss = penalized_loss(&trial_w, trial_b);
                if trial_loss <= loss + 1e-12 {
                    weights = trial_w;
                    bias = trial_b;
                    accepted = trial_loss < loss - 1e-12;
                    loss = trial_loss;
                    break;
                }
                step /= 2.0;
            }
            if !accepted {
                break;
            }
        }
        Ok(LogRegModel { weights, bias })
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }

    pub fn predict_proba(&self, row: &FeatureVector) -> Result<f64, ModelError> {
        if row.width != self.weights.len() {
            return Err(ModelError::WidthMismatch {
                expected: self.weights.len(),
                got: row.width,
            });
        }
        Ok(sigmoid(dot(&self.weights, row) + self.bias))
    }

    pub fn to_model_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{LOGREG_FORMAT}");
        let _ = writeln!(out, "width {}", self.weights.len());
        let _ = writeln!(out, "bias {}", self.bias);
        for (i, w) in self.weights.iter().enumerate() {
            let _ = writeln!(out, "weight {i} {w}");
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<LogRegModel, ModelError> {
        let mut reader = LineReader::new(text);
        let header = reader.next_line()?;
        if header != LOGREG_FORMAT {
            return Err(ModelError::UnsupportedFormat(header.to_owned()));
        }
        let width: usize = reader.kv("width")?;
        let bias: f64 = reader.kv("bias")?;
        let mut weights = Vec::with_capacity(width);
        for i in 0..width {
            let line = reader.next_line()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["weight", idx, value] if idx.parse() == Ok(i) => {
                    weights.push(
                        value
                            .parse()
                            .map_err(|_| reader.error("bad weight value"))?,
                    );
                }
                _ => return Err(reader.error("expected `weight <i> <value>`")),
            }
        }
        let footer = reader.next_line()?;
        if footer != "end" {
            return Err(reader.error("expected `end`"));
        }
        Ok(LogRegModel { weights, bias })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_model_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<LogRegModel, ModelError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn dot(weights: &[f64], row: &FeatureVector) -> f64 {
    row.entries.iter().map(|(c, v)| weights[*c] * v).sum()
}

const GBDT_FORMAT: &str = "versekit-gbdt v1";
const LOGREG_FORMAT: &str = "versekit-logreg v1";

/// Which classifier family an experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gbdt,
    LogReg,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gbdt" => Ok(ModelKind::Gbdt),
            "logreg" => Ok(ModelKind::LogReg),
            other => Err(format!("unknown model `{other}` (expected gbdt or logreg)")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Gbdt => "gbdt",
            ModelKind::LogReg => "logreg",
        })
    }
}

/// Either classifier behind one prediction interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Gbdt(GbdtModel),
    LogReg(LogRegModel),
}

impl Model {
    pub fn predict_proba(&self, row: &FeatureVector) -> Result<f64, ModelError> {
        match self {
            Model::Gbdt(m) => m.predict_proba(row),
            Model::LogReg(m) => m.predict_proba(row),
        }
    }

    /// Probability strictly above one half claims the stereotype class.
    pub fn classify(&self, row: &FeatureVector) -> Result<Label, ModelError> {
        Ok(if self.predict_proba(row)? > 0.5 {
            Label::Stereotypical
        } else {
            Label::NonStereotypical
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Gbdt(_) => ModelKind::Gbdt,
            Model::LogReg(_) => ModelKind::LogReg,
        }
    }

    pub fn to_model_string(&self) -> String {
        match self {
            Model::Gbdt(m) => m.to_model_string(),
            Model::LogReg(m) => m.to_model_string(),
        }
    }

    /// Dispatches on the header line of the dump.
    pub fn parse(text: &str) -> Result<Model, ModelError> {
        let header = text.lines().next().unwrap_or_default().trim();
        match header {
            GBDT_FORMAT => Ok(Model::Gbdt(GbdtModel::parse(text)?)),
            LOGREG_FORMAT => Ok(Model::LogReg(LogRegModel::parse(text)?)),
            other => Err(ModelError::UnsupportedFormat(other.to_owned())),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_model_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Model, ModelError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
