use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Label,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Column layout of a flow CSV.
///
/// `columns` lists columns in file order. When `default_kind` is set, header
/// columns not listed explicitly take that kind, and `columns` only needs to
/// name the exceptions; the schema is then [resolved](FeatureSchema::resolve)
/// against the actual header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    #[serde(default = "default_true")]
    pub has_header: bool,
    pub benign_label_values: BTreeSet<String>,
    #[serde(default)]
    pub default_kind: Option<ColumnKind>,
    pub columns: Vec<ColumnSpec>,
    /// Optional mapping from raw label value to a reporting group
    /// (e.g. `neptune` -> `DoS`). Unmapped values report under themselves.
    #[serde(default)]
    pub class_groups: BTreeMap<String, String>,
}

fn default_true() -> bool {
    true
}

impl FeatureSchema {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let schema: FeatureSchema = toml::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        if schema.default_kind.is_none() {
            schema.validate()?;
        }
        Ok(schema)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let labels = self.columns.iter().filter(|c| c.kind == ColumnKind::Label).count();
        if labels != 1 {
            return Err(Error::Schema(format!("expected exactly one label column, found {labels}")));
        }
        let mut seen = HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name {:?}", c.name)));
            }
        }
        Ok(())
    }

    pub fn is_benign(&self, raw_label: &str) -> bool {
        self.benign_label_values.contains(raw_label)
    }

    pub fn group_of<'a>(&'a self, raw_label: &'a str) -> &'a str {
        self.class_groups.get(raw_label).map_or(raw_label, String::as_str)
    }

    /// Produce a fully explicit schema for a concrete header.
    pub fn resolve(&self, header: &[String]) -> Result<FeatureSchema> {
        let explicit: BTreeMap<&str, ColumnKind> =
            self.columns.iter().map(|c| (c.name.trim(), c.kind)).collect();
        let mut columns = Vec::with_capacity(header.len());
        for h in header {
            let name = h.trim();
            let kind = match (explicit.get(name), self.default_kind) {
                (Some(k), _) => *k,
                (None, Some(k)) => k,
                (None, None) => return Err(Error::Schema(format!("unknown column {name:?}"))),
            };
            columns.push(ColumnSpec {
                name: name.to_string(),
                kind,
            });
        }
        if self.default_kind.is_none() && columns.len() != self.columns.len() {
            return Err(Error::Schema(format!(
                "header has {} columns, schema lists {}",
                columns.len(),
                self.columns.len()
            )));
        }
        for c in &self.columns {
            let optional = self.default_kind.is_some() && c.kind == ColumnKind::Drop;
            if !optional && !columns.iter().any(|r| r.name == c.name.trim()) {
                return Err(Error::Schema(format!("schema column {:?} missing from header", c.name)));
            }
        }
        let resolved = FeatureSchema {
            has_header: self.has_header,
            benign_label_values: self.benign_label_values.clone(),
            default_kind: None,
            columns,
            class_groups: self.class_groups.clone(),
        };
        resolved.validate()?;
        Ok(resolved)
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn categorical_columns(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Categorical)
            .map(|c| c.name.clone())
            .collect()
    }

    /// NSL-KDD `KDDTrain+.txt` / `KDDTest+.txt`: headerless, 41 features,
    /// the label and the difficulty score.
    pub fn nsl_kdd() -> Self {
        const NUMERIC_AFTER_FLAG: [&str; 37] = [
            "src_bytes",
            "dst_bytes",
            "land",
            "wrong_fragment",
            "urgent",
            "hot",
            "num_failed_logins",
            "logged_in",
            "num_compromised",
            "root_shell",
            "su_attempted",
            "num_root",
            "num_file_creations",
            "num_shells",
            "num_access_files",
            "num_outbound_cmds",
            "is_host_login",
            "is_guest_login",
            "count",
            "srv_count",
            "serror_rate",
            "srv_serror_rate",
            "rerror_rate",
            "srv_rerror_rate",
            "same_srv_rate",
            "diff_srv_rate",
            "srv_diff_host_rate",
            "dst_host_count",
            "dst_host_srv_count",
            "dst_host_same_srv_rate",
            "dst_host_diff_srv_rate",
            "dst_host_same_src_port_rate",
            "dst_host_srv_diff_host_rate",
            "dst_host_serror_rate",
            "dst_host_srv_serror_rate",
            "dst_host_rerror_rate",
            "dst_host_srv_rerror_rate",
        ];
        let col = |name: &str, kind| ColumnSpec {
            name: name.to_string(),
            kind,
        };
        let mut columns = vec![
            col("duration", ColumnKind::Numeric),
            col("protocol_type", ColumnKind::Categorical),
            col("service", ColumnKind::Categorical),
            col("flag", ColumnKind::Categorical),
        ];
        columns.extend(NUMERIC_AFTER_FLAG.iter().map(|n| col(n, ColumnKind::Numeric)));
        columns.push(col("label", ColumnKind::Label));
        columns.push(col("difficulty", ColumnKind::Drop));

        let groups: &[(&str, &[&str])] = &[
            (
                "DoS",
                &[
                    "back", "land", "neptune", "pod", "smurf", "teardrop", "apache2", "mailbomb", "processtable",
                    "udpstorm", "worm",
                ],
            ),
            ("Probe", &["ipsweep", "nmap", "portsweep", "satan", "mscan", "saint"]),
            (
                "R2L",
                &[
                    "ftp_write",
                    "guess_passwd",
                    "imap",
                    "multihop",
                    "phf",
                    "spy",
                    "warezclient",
                    "warezmaster",
                    "sendmail",
                    "named",
                    "snmpgetattack",
                    "snmpguess",
                    "xlock",
                    "xsnoop",
                    "httptunnel",
                ],
            ),
            (
                "U2R",
                &["buffer_overflow", "loadmodule", "perl", "rootkit", "ps", "sqlattack", "xterm"],
            ),
            ("Normal", &["normal"]),
        ];
        let class_groups = groups
            .iter()
            .flat_map(|(g, names)| names.iter().map(move |n| (n.to_string(), g.to_string())))
            .collect();

        FeatureSchema {
            has_header: false,
            benign_label_values: ["normal".to_string()].into_iter().collect(),
            default_kind: None,
            columns,
            class_groups,
        }
    }

    /// CICIDS2017 CICFlowMeter CSVs. Identifier, address, port and timestamp
    /// columns are dropped; everything else is numeric.
    pub fn cicids2017() -> Self {
        let drop = [
            "Flow ID",
            "Source IP",
            "Src IP",
            "Source Port",
            "Src Port",
            "Destination IP",
            "Dst IP",
            "Destination Port",
            "Dst Port",
            "Timestamp",
        ];
        let mut columns: Vec<ColumnSpec> = drop
            .iter()
            .map(|n| ColumnSpec {
                name: n.to_string(),
                kind: ColumnKind::Drop,
            })
            .collect();
        columns.push(ColumnSpec {
            name: "Label".to_string(),
            kind: ColumnKind::Label,
        });
        FeatureSchema {
            has_header: true,
            benign_label_values: ["BENIGN".to_string()].into_iter().collect(),
            default_kind: Some(ColumnKind::Numeric),
            columns,
            class_groups: BTreeMap::new(),
        }
    }
}
