use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;
use crate::tree::{DecisionTree, MaxFeatures, TreeNode, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            max_depth: None,
            min_samples_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateTree {
    pub tree: DecisionTree,
    pub feature_names: Vec<String>,
    /// Agreement with the reference model on the fitting data.
    pub fidelity: f64,
    pub training_size: usize,
    /// Reference-model labels on the fitting data, kept so fidelity can be
    /// recomputed.
    pub reference_labels: Vec<u8>,
}

impl SurrogateTree {
    pub fn predict(&self, row: &[f64]) -> u8 {
        self.tree.predict(row)
    }
}

/// Fraction of rows where `tree` and `labels` agree.
pub fn agreement(tree: &DecisionTree, data: &Matrix, labels: &[u8]) -> f64 {
    let hits = (0..data.rows()).filter(|&i| tree.predict(data.row(i)) == labels[i]).count();
    hits as f64 / data.rows() as f64
}

/// Fit a CART tree to the model's own labels on `data`.
pub fn fit_surrogate(
    model: &dyn Classifier,
    data: &Matrix,
    feature_names: &[String],
    cfg: &SurrogateConfig,
    seed_value: u64,
) -> Result<SurrogateTree> {
    if data.is_empty() {
        return Err(Error::Empty("surrogate needs data".into()));
    }
    if data.cols() != model.n_features() || feature_names.len() != data.cols() {
        return Err(Error::Dimension {
            expected: model.n_features(),
            got: data.cols(),
        });
    }
    let labels: Vec<u8> = (0..data.rows())
        .into_par_iter()
        .map(|i| model.predict_label(data.row(i)))
        .collect::<Result<_>>()?;
    let params = TreeParams {
        max_depth: cfg.max_depth,
        min_samples_split: 2,
        min_samples_leaf: cfg.min_samples_leaf.max(1),
        max_features: MaxFeatures::All,
    };
    let tree = DecisionTree::fit_all(data, &labels, params, &mut seed::rng(seed_value))?;
    Ok(SurrogateTree {
        fidelity: agreement(&tree, data, &labels),
        tree,
        feature_names: feature_names.to_vec(),
        training_size: data.rows(),
        reference_labels: labels,
    })
}

/// `lower < x[feature] <= upper`; a missing bound is unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub name: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Condition {
    pub fn holds(&self, row: &[f64]) -> bool {
        let v = row[self.feature];
        self.lower.is_none_or(|l| v > l) && self.upper.is_none_or(|u| v <= u)
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => write!(f, "{l} < {} <= {u}", self.name),
            (Some(l), None) => write!(f, "{} > {l}", self.name),
            (None, Some(u)) => write!(f, "{} <= {u}", self.name),
            (None, None) => write!(f, "{} any", self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// Sorted by feature index.
    pub conditions: Vec<Condition>,
    pub class: u8,
    /// Index of the leaf in the tree.
    pub leaf: usize,
    pub coverage: usize,
    /// Fraction of covered rows whose label equals `class`; `None` when
    /// nothing is covered.
    pub purity: Option<f64>,
}

impl Rule {
    pub fn matches(&self, row: &[f64]) -> bool {
        self.conditions.iter().all(|c| c.holds(row))
    }

    pub fn antecedent(&self) -> String {
        if self.conditions.is_empty() {
            return "TRUE".into();
        }
        self.conditions.iter().map(ToString::to_string).collect::<Vec<_>>().join(" AND ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub n_rows: usize,
}

fn class_name(c: u8) -> &'static str {
    if c == 1 {
        "attack"
    } else {
        "benign"
    }
}

impl RuleSet {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, r) in self.rules.iter().enumerate() {
            let purity = r.purity.map_or("n/a".to_string(), |p| format!("{p:.4}"));
            let _ = writeln!(
                s,
                "R{i}: IF {} THEN {} [coverage {}, purity {purity}]",
                r.antecedent(),
                class_name(r.class),
                r.coverage
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rule,conditions,class,coverage,purity\n");
        for (i, r) in self.rules.iter().enumerate() {
            let _ = writeln!(
                s,
                "{i},\"{}\",{},{},{}",
                r.antecedent().replace('"', "\"\""),
                class_name(r.class),
                r.coverage,
                r.purity.map_or(String::new(), |p| p.to_string())
            );
        }
        s
    }

    /// Index of the rule matching `row`.
    pub fn rule_for(&self, row: &[f64]) -> Option<usize> {
        self.rules.iter().position(|r| r.matches(row))
    }
}

fn intersect(conds: &mut Vec<Condition>, feature: usize, name: &str, lower: Option<f64>, upper: Option<f64>) {
    let c = match conds.iter_mut().find(|c| c.feature == feature) {
        Some(c) => c,
        None => {
            conds.push(Condition {
                feature,
                name: name.to_string(),
                lower: None,
                upper: None,
            });
            conds.last_mut().expect("just pushed")
        }
    };
    if let Some(l) = lower {
        c.lower = Some(c.lower.map_or(l, |x: f64| x.max(l)));
    }
    if let Some(u) = upper {
        c.upper = Some(c.upper.map_or(u, |x: f64| x.min(u)));
    }
}

/// One rule per leaf, left subtrees first. `labels` are the reference
/// labels used for purity (usually the model's predictions on `data`).
pub fn extract_rules(tree: &DecisionTree, feature_names: &[String], data: &Matrix, labels: &[u8]) -> Result<RuleSet> {
    if labels.len() != data.rows() {
        return Err(Error::Dimension {
            expected: data.rows(),
            got: labels.len(),
        });
    }
    if data.cols() != tree.n_features || feature_names.len() != tree.n_features {
        return Err(Error::Dimension {
            expected: tree.n_features,
            got: data.cols(),
        });
    }
    let mut rules = Vec::new();
    let mut stack: Vec<(usize, Vec<Condition>)> = vec![(0, Vec::new())];
    while let Some((node, conds)) = stack.pop() {
        match &tree.nodes[node] {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let name = &feature_names[*feature];
                let mut r = conds.clone();
                intersect(&mut r, *feature, name, Some(*threshold), None);
                let mut l = conds;
                intersect(&mut l, *feature, name, None, Some(*threshold));
                stack.push((*right, r));
                stack.push((*left, l));
            }
            TreeNode::Leaf { counts } => {
                let mut conditions = conds;
                conditions.sort_by_key(|c| c.feature);
                rules.push(Rule {
                    conditions,
                    class: TreeNode::leaf_class(*counts),
                    leaf: node,
                    coverage: 0,
                    purity: None,
                });
            }
        }
    }
    let leaf_rule: std::collections::HashMap<usize, usize> =
        rules.iter().enumerate().map(|(i, r)| (r.leaf, i)).collect();
    let mut hits = vec![[0usize; 2]; rules.len()];
    for i in 0..data.rows() {
        let r = leaf_rule[&tree.leaf_index(data.row(i))];
        hits[r][usize::from(labels[i] == rules[r].class)] += 1;
    }
    for (r, h) in rules.iter_mut().zip(hits) {
        r.coverage = h[0] + h[1];
        r.purity = (r.coverage > 0).then(|| h[1] as f64 / r.coverage as f64);
    }
    Ok(RuleSet {
        rules,
        n_rows: data.rows(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::FnClassifier;
    use rand::Rng;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    #[test]
    fn stump_reference_is_reproduced() {
        let mut rng = seed::rng(1);
        let rows: Vec<Vec<f64>> = (0..300).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let model = FnClassifier::new(3, |x: &[f64]| if x[1] > 0.4 { 1.0 } else { 0.0 });
        let s = fit_surrogate(&model, &data, &names(3), &SurrogateConfig::default(), 2).unwrap();
        assert_eq!(s.fidelity, 1.0);
        let rules = extract_rules(&s.tree, &s.feature_names, &data, &s.reference_labels).unwrap();
        assert_eq!(rules.rules.len(), 2);
        assert_eq!(rules.rules[0].conditions[0].feature, 1);
        assert_eq!(rules.rules[0].class, 0);
        assert_eq!(rules.rules[1].class, 1);
        assert_eq!(rules.rules.iter().map(|r| r.coverage).sum::<usize>(), 300);
    }

    #[test]
    fn distinct_inputs_are_memorised() {
        let mut rng = seed::rng(2);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..2).map(|_| rng.gen::<f64>()).collect()).collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let model = FnClassifier::new(2, |x: &[f64]| ((x[0] * 1000.0) as u64 % 2) as f64);
        let cfg = SurrogateConfig {
            max_depth: None,
            min_samples_leaf: 1,
        };
        let s = fit_surrogate(&model, &data, &names(2), &cfg, 3).unwrap();
        assert_eq!(s.fidelity, 1.0);
    }
}
