//! Human-in-the-loop review of ensemble detections.
//!
//! A [`ReviewSession`] holds one item per validation row. Decisions move an
//! item from pending to a terminal status exactly once and are appended to a
//! JSON-lines log before the in-memory state changes, so replaying the log
//! rebuilds the session. The HTTP layer is a thin axum router over the
//! session.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::artifact::RunArtifact;
use super::commands::{load_split, Layout};
use super::config::{PipelineConfig, QueueOrder};
use crate::dataio::FlowDataset;
use crate::ensemble::{EnsembleModel, VotePrediction, VotingMode};
use crate::error::{Error, Result};
use crate::explain::{lime_explain, Classifier, LimeConfig, LocalExplanation, TrainStats};
use crate::matrix::Matrix;
use crate::refinement::{make_pseudo_labels, AnalystAction, PseudoLabelSet, PseudoMode, ReviewDecision};
use crate::seed;

pub const BIND_ENV: &str = "FLOWSENTRY_REVIEW_ADDR";
pub const DEFAULT_BIND: &str = "127.0.0.1:8087";

/// The ensemble as a classifier: probability is the attack share of the
/// vote mass, the label follows the voting rule.
pub struct EnsembleClassifier {
    pub model: Arc<EnsembleModel>,
    pub mode: VotingMode,
}

impl Classifier for EnsembleClassifier {
    fn n_features(&self) -> usize {
        self.model.input_dim()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        let votes = self.model.point_votes(row)?;
        Ok(self.model.combine(&votes, self.mode)?.attack_share())
    }

    fn predict_label(&self, row: &[f64]) -> Result<u8> {
        let votes = self.model.point_votes(row)?;
        Ok(self.model.combine(&votes, self.mode)?.label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "label", rename_all = "lowercase")]
pub enum ItemStatus {
    Pending,
    Approved,
    Rejected,
    Relabelled(u8),
}

impl From<Option<AnalystAction>> for ItemStatus {
    fn from(a: Option<AnalystAction>) -> Self {
        match a {
            None => ItemStatus::Pending,
            Some(AnalystAction::Approve) => ItemStatus::Approved,
            Some(AnalystAction::Reject) => ItemStatus::Rejected,
            Some(AnalystAction::Relabel(l)) => ItemStatus::Relabelled(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSummary {
    pub id: usize,
    pub ensemble_label: u8,
    pub score_benign: f64,
    pub score_attack: f64,
    pub margin: f64,
    #[serde(flatten)]
    pub status: ItemStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDetail {
    #[serde(flatten)]
    pub summary: ItemSummary,
    pub features: Vec<NamedValue>,
    pub explanation: Option<LocalExplanation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueuePage {
    pub page: usize,
    pub page_size: usize,
    pub total: usize,
    pub items: Vec<ItemSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub total: usize,
    pub decided: usize,
    pub pending: usize,
    pub approved: usize,
    pub rejected: usize,
    pub relabelled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub id: usize,
    #[serde(flatten)]
    pub status: ItemStatus,
    /// False when the same decision had already been recorded.
    pub changed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalizeOutcome {
    pub size: usize,
    pub undecided: usize,
    pub path: PathBuf,
}

/// What item explanations need.
pub struct ExplainContext {
    pub classifier: EnsembleClassifier,
    pub stats: TrainStats,
    pub lime: LimeConfig,
    pub seed: u64,
}

pub struct ReviewSession {
    data: Matrix,
    feature_names: Vec<String>,
    preds: Vec<VotePrediction>,
    order: Vec<usize>,
    status: Vec<Option<AnalystAction>>,
    decisions: Vec<ReviewDecision>,
    log_path: PathBuf,
    output_path: PathBuf,
    page_size: usize,
    explain: Option<ExplainContext>,
}

/// Read a decision log. Blank lines are skipped.
pub fn read_decision_log(path: &Path) -> Result<Vec<ReviewDecision>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let d: ReviewDecision = serde_json::from_str(&line)
            .map_err(|e| Error::Artifact(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(d);
    }
    Ok(out)
}

/// Rebuild the reviewed pseudo-label set from predictions and a log.
pub fn replay(preds: &[u8], log: &Path) -> Result<PseudoLabelSet> {
    let decisions = read_decision_log(log)?;
    make_pseudo_labels(preds, PseudoMode::Reviewed, None, Some(&decisions))
}

fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl ReviewSession {
    /// Session over `data` with the given ensemble predictions. Existing
    /// decisions in `log_path` are replayed.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        data: Matrix,
        feature_names: Vec<String>,
        preds: Vec<VotePrediction>,
        order: QueueOrder,
        page_size: usize,
        log_path: PathBuf,
        output_path: PathBuf,
        explain: Option<ExplainContext>,
    ) -> Result<Self> {
        if preds.len() != data.rows() {
            return Err(Error::Dimension {
                expected: data.rows(),
                got: preds.len(),
            });
        }
        let mut idx: Vec<usize> = (0..preds.len()).collect();
        if order == QueueOrder::Uncertainty {
            idx.sort_by(|&a, &b| preds[a].margin().total_cmp(&preds[b].margin()).then(a.cmp(&b)));
        }
        let mut s = ReviewSession {
            status: vec![None; preds.len()],
            data,
            feature_names,
            preds,
            order: idx,
            decisions: Vec::new(),
            log_path,
            output_path,
            page_size: page_size.max(1),
            explain,
        };
        for d in read_decision_log(&s.log_path)? {
            s.apply(d)?;
        }
        if !s.decisions.is_empty() {
            log::info!("replayed {} review decisions", s.decisions.len());
        }
        Ok(s)
    }

    /// Session over the validation split of a run.
    pub fn open(cfg: &PipelineConfig, run: &RunArtifact, validation: &FlowDataset) -> Result<Self> {
        let ens = run.ensemble()?;
        let votes = ens.votes(&validation.features)?;
        let preds = ens.predict_table(&votes, cfg.voting)?;
        let train = load_split(cfg, "train")?;
        let explain = ExplainContext {
            classifier: EnsembleClassifier {
                model: Arc::new(ens.clone()),
                mode: cfg.voting,
            },
            stats: TrainStats::fit(&train.features, &train.feature_names)?,
            lime: LimeConfig {
                n_samples: cfg.review.explanation_samples.max(10 * cfg.explain.top_k),
                ..cfg.explain
            },
            seed: seed::stream_seed(cfg.seed, "review-explain"),
        };
        let layout = Layout::new(&cfg.output_dir);
        Self::new(
            validation.features.clone(),
            validation.feature_names.clone(),
            preds,
            cfg.review.queue_order,
            cfg.review.page_size,
            layout.decision_log(),
            layout.reviewed_set(),
            Some(explain),
        )
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn decisions(&self) -> &[ReviewDecision] {
        &self.decisions
    }

    pub fn labels(&self) -> Vec<u8> {
        self.preds.iter().map(|p| p.label).collect()
    }

    fn check(&self, id: usize) -> Result<()> {
        if id >= self.len() {
            return Err(Error::NotFound(format!("item {id}")));
        }
        Ok(())
    }

    fn apply(&mut self, d: ReviewDecision) -> Result<bool> {
        self.check(d.row)?;
        if let AnalystAction::Relabel(l) = d.action {
            if l > 1 {
                return Err(Error::invalid(format!("relabel to {l}; labels are 0 or 1")));
            }
        }
        match self.status[d.row] {
            Some(a) if a == d.action => Ok(false),
            Some(a) => Err(Error::Conflict(format!(
                "item {} already has decision {:?}",
                d.row,
                ItemStatus::from(Some(a))
            ))),
            None => {
                self.status[d.row] = Some(d.action);
                self.decisions.push(d);
                Ok(true)
            }
        }
    }

    fn summary(&self, id: usize) -> ItemSummary {
        let p = &self.preds[id];
        ItemSummary {
            id,
            ensemble_label: p.label,
            score_benign: p.score_benign,
            score_attack: p.score_attack,
            margin: p.margin(),
            status: self.status[id].into(),
        }
    }

    /// Queue page; `pending_only` hides decided items.
    pub fn queue(&self, page: usize, page_size: Option<usize>, pending_only: bool) -> QueuePage {
        let size = page_size.unwrap_or(self.page_size).clamp(1, 1000);
        let ids: Vec<usize> = self
            .order
            .iter()
            .copied()
            .filter(|&i| !pending_only || self.status[i].is_none())
            .collect();
        QueuePage {
            page,
            page_size: size,
            total: ids.len(),
            items: ids.iter().skip(page.saturating_mul(size)).take(size).map(|&i| self.summary(i)).collect(),
        }
    }

    pub fn item(&self, id: usize) -> Result<ItemDetail> {
        self.check(id)?;
        Ok(ItemDetail {
            summary: self.summary(id),
            features: self
                .feature_names
                .iter()
                .zip(self.data.row(id))
                .map(|(n, &v)| NamedValue { name: n.clone(), value: v })
                .collect(),
            explanation: None,
        })
    }

    /// LIME explanation of an item under the ensemble.
    pub fn explain(&self, id: usize) -> Result<Option<LocalExplanation>> {
        self.check(id)?;
        let Some(ctx) = &self.explain else {
            return Ok(None);
        };
        lime_explain(&ctx.classifier, &id.to_string(), self.data.row(id), &ctx.stats, &ctx.lime, ctx.seed).map(Some)
    }

    /// Record a decision. Repeating the recorded decision is a no-op;
    /// a different one is a conflict.
    pub fn decide(&mut self, id: usize, action: AnalystAction) -> Result<DecisionOutcome> {
        self.check(id)?;
        let d = ReviewDecision {
            row: id,
            action,
            timestamp: now_ms(),
        };
        // Validate against the current state before touching the log.
        match self.status[id] {
            Some(a) if a == action => {
                return Ok(DecisionOutcome {
                    id,
                    status: self.status[id].into(),
                    changed: false,
                })
            }
            Some(_) => {
                self.apply(d)?;
                unreachable!("apply reports the conflict");
            }
            None => {}
        }
        if let AnalystAction::Relabel(l) = action {
            if l > 1 {
                return Err(Error::invalid(format!("relabel to {l}; labels are 0 or 1")));
            }
        }
        self.append(&d)?;
        let changed = self.apply(d)?;
        Ok(DecisionOutcome {
            id,
            status: self.status[id].into(),
            changed,
        })
    }

    fn append(&self, d: &ReviewDecision) -> Result<()> {
        let path = &self.log_path;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let mut line = serde_json::to_string(d)?;
        line.push('\n');
        f.write_all(line.as_bytes()).and_then(|_| f.sync_data()).map_err(|e| Error::io(path, e))
    }

    /// Approve every pending item in queue order. Returns how many.
    pub fn auto_accept(&mut self) -> Result<usize> {
        let pending: Vec<usize> = self.order.iter().copied().filter(|&i| self.status[i].is_none()).collect();
        for &i in &pending {
            self.decide(i, AnalystAction::Approve)?;
        }
        Ok(pending.len())
    }

    pub fn progress(&self) -> Progress {
        let mut p = Progress {
            total: self.len(),
            decided: 0,
            pending: 0,
            approved: 0,
            rejected: 0,
            relabelled: 0,
        };
        for s in &self.status {
            match s {
                None => p.pending += 1,
                Some(AnalystAction::Approve) => p.approved += 1,
                Some(AnalystAction::Reject) => p.rejected += 1,
                Some(AnalystAction::Relabel(_)) => p.relabelled += 1,
            }
        }
        p.decided = p.total - p.pending;
        p
    }

    /// The reviewed set from the decisions so far.
    pub fn pseudo_labels(&self) -> Result<PseudoLabelSet> {
        make_pseudo_labels(&self.labels(), PseudoMode::Reviewed, None, Some(&self.decisions))
    }

    /// Write the reviewed set. At least one decision is required.
    pub fn finalize(&self) -> Result<FinalizeOutcome> {
        if self.decisions.is_empty() {
            return Err(Error::invalid("nothing to finalize: no item has been decided"));
        }
        let set = self.pseudo_labels()?;
        let path = &self.output_path;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, serde_json::to_vec_pretty(&set)?).map_err(|e| Error::io(path, e))?;
        Ok(FinalizeOutcome {
            size: set.len(),
            undecided: set.undecided,
            path: path.clone(),
        })
    }
}

/// Shared state: one writer at a time, concurrent readers, and a cache of
/// computed explanations.
#[derive(Clone)]
pub struct ReviewState {
    session: Arc<RwLock<ReviewSession>>,
    explanations: Arc<Mutex<HashMap<usize, LocalExplanation>>>,
}

impl ReviewState {
    pub fn new(session: ReviewSession) -> Self {
        ReviewState {
            session: Arc::new(RwLock::new(session)),
            explanations: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    pub fn session(&self) -> &Arc<RwLock<ReviewSession>> {
        &self.session
    }
}

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = match &self.0 {
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::Conflict(_) => StatusCode::CONFLICT,
            Error::InvalidParameter(_) | Error::Dimension { .. } | Error::Empty(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (code, Json(serde_json::json!({ "error": self.0.to_string() }))).into_response()
    }
}

fn poisoned() -> ApiError {
    ApiError(Error::Artifact("review state lock poisoned".into()))
}

#[derive(Debug, Deserialize)]
struct QueueParams {
    #[serde(default)]
    page: usize,
    page_size: Option<usize>,
    /// `pending` (default) or `all`.
    status: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ItemParams {
    explain: Option<bool>,
}

async fn get_queue(State(st): State<ReviewState>, Query(q): Query<QueueParams>) -> Result<Json<QueuePage>, ApiError> {
    let pending_only = match q.status.as_deref() {
        None | Some("pending") => true,
        Some("all") => false,
        Some(other) => return Err(Error::invalid(format!("unknown status filter {other:?}")).into()),
    };
    let s = st.session.read().map_err(|_| poisoned())?;
    Ok(Json(s.queue(q.page, q.page_size, pending_only)))
}

async fn get_item(
    State(st): State<ReviewState>,
    UrlPath(id): UrlPath<usize>,
    Query(q): Query<ItemParams>,
) -> Result<Json<ItemDetail>, ApiError> {
    let mut detail = st.session.read().map_err(|_| poisoned())?.item(id)?;
    if q.explain.unwrap_or(true) {
        let cached = st.explanations.lock().map_err(|_| poisoned())?.get(&id).cloned();
        detail.explanation = match cached {
            Some(e) => Some(e),
            None => {
                let state = st.clone();
                let e = tokio::task::spawn_blocking(move || {
                    state.session.read().map_err(|_| poisoned())?.explain(id).map_err(ApiError)
                })
                .await
                .map_err(|e| ApiError(Error::Artifact(e.to_string())))??;
                if let Some(e) = &e {
                    st.explanations.lock().map_err(|_| poisoned())?.insert(id, e.clone());
                }
                e
            }
        };
    }
    Ok(Json(detail))
}

async fn post_decision(
    State(st): State<ReviewState>,
    UrlPath(id): UrlPath<usize>,
    Json(action): Json<AnalystAction>,
) -> Result<Json<DecisionOutcome>, ApiError> {
    let mut s = st.session.write().map_err(|_| poisoned())?;
    Ok(Json(s.decide(id, action)?))
}

async fn get_progress(State(st): State<ReviewState>) -> Result<Json<Progress>, ApiError> {
    Ok(Json(st.session.read().map_err(|_| poisoned())?.progress()))
}

async fn post_finalize(State(st): State<ReviewState>) -> Result<Json<FinalizeOutcome>, ApiError> {
    let s = st.session.write().map_err(|_| poisoned())?;
    Ok(Json(s.finalize()?))
}

pub fn router(state: ReviewState) -> Router {
    Router::new()
        .route("/queue", get(get_queue))
        .route("/item/{id}", get(get_item))
        .route("/item/{id}/decision", post(post_decision))
        .route("/progress", get(get_progress))
        .route("/finalize", post(post_finalize))
        .with_state(state)
}

/// Bind address: `FLOWSENTRY_REVIEW_ADDR` if set, else the default.
pub fn bind_address() -> Result<SocketAddr> {
    let raw = std::env::var(BIND_ENV).unwrap_or_else(|_| DEFAULT_BIND.to_string());
    raw.parse()
        .map_err(|e| Error::Config(format!("{BIND_ENV}={raw:?} is not a socket address: {e}")))
}

/// Serve until the process is stopped.
pub async fn serve(state: ReviewState, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(PathBuf::from(addr.to_string()), e))?;
    log::info!("review service listening on http://{addr}");
    axum::serve(listener, router(state))
        .await
        .map_err(|e| Error::io(PathBuf::from(addr.to_string()), e))
}
