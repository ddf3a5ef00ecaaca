use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use aeroroi::model::{Histogram2D, IdentificationResult, Method, SourcePartSet};
use aeroroi::pipeline::{identify, roi_export, source_spectra, PipelineConfig, RoiExport};
use aeroroi::sind::{build_histogram, ellipse_polylines, EllipsePolyline, SindParams};
use aeroroi::sihc::SihcParams;
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;

use crate::error::CliResult;
use crate::layout::Layout;

/// Revisions kept for spectrum and export lookups.
const KEPT_REVISIONS: usize = 32;

/// Contour levels drawn for SIND sources, in sigmas.
const ELLIPSE_LEVELS: [f64; 3] = [1.0, 2.0, 3.0];

/// Identification output of one revision.
#[derive(Debug, Clone, Serialize)]
pub struct RevisionPayload {
    pub method: Method,
    pub result: IdentificationResult,
    pub spectra: Vec<SourceSpectrum>,
    pub ellipses: Vec<EllipsePolyline>,
}

/// Spectrum of one source in one configuration; `null` levels are ABSENT bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpectrum {
    pub source: usize,
    pub config_id: usize,
    pub mach: f64,
    pub freqs_hz: Vec<f64>,
    pub psd_db: Vec<Option<f64>>,
}

/// One loaded dataset plus the identification runs made against it.
pub struct Session {
    parts: SourcePartSet,
    seed: u64,
    histogram: Histogram2D,
    base: PipelineConfig,
    revision: AtomicU64,
    runs: RwLock<BTreeMap<u64, Arc<RevisionPayload>>>,
    identify_lock: Mutex<()>,
}

impl Session {
    pub fn new(parts: SourcePartSet, seed: u64, base: PipelineConfig) -> CliResult<Self> {
        let histogram = build_histogram(parts.parts(), parts.grid())?;
        Ok(Self {
            parts,
            seed,
            histogram,
            base,
            revision: AtomicU64::new(0),
            runs: RwLock::new(BTreeMap::new()),
            identify_lock: Mutex::new(()),
        })
    }

    /// Reads `dataset.json` and `parts.csv` from the configured output directory.
    pub fn load(cfg: &PipelineConfig) -> CliResult<Self> {
        let out = Layout::new(&cfg.output_dir);
        let info = out.read_dataset()?;
        let parts = out.read_parts(&info)?;
        let seed = cfg.seed.unwrap_or(info.seed);
        Self::new(parts, seed, cfg.clone())
    }

    pub fn revision(&self) -> u64 {
        self.revision.load(Ordering::SeqCst)
    }

    fn run(&self, rev: u64) -> Option<Arc<RevisionPayload>> {
        self.runs.read().expect("revision map poisoned").get(&rev).cloned()
    }

    /// Same computation as the `identify` subcommand for one method.
    fn compute(&self, cfg: &PipelineConfig, method: Method) -> aeroroi::Result<RevisionPayload> {
        let run = identify(&self.parts, method, cfg)?;
        let result = run.result().clone();
        let spectra = source_spectra(&self.parts, &result)?
            .into_iter()
            .map(|(source, s)| SourceSpectrum {
                source,
                config_id: s.config_id,
                mach: self.parts.configs()[s.config_id].mach,
                freqs_hz: s.freqs_hz,
                psd_db: s.psd_db,
            })
            .collect();
        let ellipses = match &run {
            aeroroi::pipeline::MethodRun::Sind(r) => ellipse_polylines(&r.gaussians(), &ELLIPSE_LEVELS, 64),
            aeroroi::pipeline::MethodRun::Sihc(_) => Vec::new(),
        };
        Ok(RevisionPayload { method, result, spectra, ellipses })
    }
}

pub type SharedSession = Arc<Session>;

pub fn router(session: SharedSession, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/summary", get(summary))
        .route("/api/identify", post(identify_handler))
        .route("/api/source/{rev}/{id}/spectrum", get(spectrum))
        .route("/api/export", post(export))
        .with_state(session);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// JSON body with a `revision` field and an `x-revision` header.
fn reply(status: StatusCode, revision: u64, mut body: Value) -> Response {
    if let Value::Object(map) = &mut body {
        map.insert("revision".into(), json!(revision));
    }
    let mut resp = (status, Json(body)).into_response();
    resp.headers_mut().insert("x-revision", HeaderValue::from(revision));
    resp
}

fn error_reply(status: StatusCode, revision: u64, message: impl Into<String>, field: Option<String>) -> Response {
    reply(status, revision, json!({ "error": message.into(), "field": field }))
}

async fn summary(State(s): State<SharedSession>) -> Response {
    let grid = s.parts.grid();
    reply(
        StatusCode::OK,
        s.revision(),
        json!({
            "seed": s.seed,
            "part_count": s.parts.len(),
            "grid": grid,
            "configs": s.parts.configs(),
            "histogram": { "n1": grid.n1, "n2": grid.n2, "counts": s.histogram.counts() },
            "defaults": { "sind": s.base.sind, "sihc": s.base.sihc },
        }),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IdentifyRequest {
    method: Method,
    #[serde(default)]
    params: Option<Value>,
}

/// Decodes `value` into `T`, reporting the path of the offending field.
fn decode<T: serde::de::DeserializeOwned>(value: Value, prefix: &str) -> Result<T, (String, Option<String>)> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = (path != ".").then(|| format!("{prefix}{path}"));
        (e.into_inner().to_string(), field)
    })
}

async fn identify_handler(State(s): State<SharedSession>, body: Bytes) -> Response {
    let bad = |msg: String, field: Option<String>| error_reply(StatusCode::BAD_REQUEST, s.revision(), msg, field);
    let raw: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return bad(format!("malformed JSON: {e}"), None),
    };
    let req: IdentifyRequest = match decode(raw, "") {
        Ok(r) => r,
        Err((msg, field)) => return bad(msg, field),
    };
    let mut cfg = s.base.clone();
    // params replace the session defaults wholesale; omitted fields take type defaults
    match (req.method, req.params) {
        (_, None) => {}
        (Method::Sind, Some(p)) => match decode::<SindParams>(p, "params.") {
            Ok(p) => cfg.sind = p,
            Err((msg, field)) => return bad(msg, field),
        },
        (Method::Sihc, Some(p)) => match decode::<SihcParams>(p, "params.") {
            Ok(p) => cfg.sihc = p,
            Err((msg, field)) => return bad(msg, field),
        },
    }
    let Ok(_guard) = s.identify_lock.try_lock() else {
        return error_reply(StatusCode::CONFLICT, s.revision(), "an identification is already running", None);
    };
    let worker = Arc::clone(&s);
    let method = req.method;
    let outcome = tokio::task::spawn_blocking(move || worker.compute(&cfg, method)).await;
    let payload = match outcome {
        Ok(Ok(p)) => Arc::new(p),
        Ok(Err(e)) if e.is_config() => return bad(e.to_string(), Some("params".into())),
        Ok(Err(e)) => return error_reply(StatusCode::UNPROCESSABLE_ENTITY, s.revision(), e.to_string(), None),
        Err(e) => return error_reply(StatusCode::INTERNAL_SERVER_ERROR, s.revision(), e.to_string(), None),
    };
    let rev = {
        let mut runs = s.runs.write().expect("revision map poisoned");
        let rev = s.revision.fetch_add(1, Ordering::SeqCst) + 1;
        runs.insert(rev, Arc::clone(&payload));
        while runs.len() > KEPT_REVISIONS {
            runs.pop_first();
        }
        rev
    };
    reply(StatusCode::OK, rev, serde_json::to_value(&*payload).expect("payload serializes"))
}

async fn spectrum(State(s): State<SharedSession>, Path((rev, id)): Path<(u64, usize)>) -> Response {
    let Some(run) = s.run(rev) else {
        return error_reply(StatusCode::NOT_FOUND, rev, format!("unknown revision {rev}"), None);
    };
    if id >= run.result.sources.len() {
        return error_reply(StatusCode::NOT_FOUND, rev, format!("revision {rev} has no source {id}"), None);
    }
    let spectra: Vec<&SourceSpectrum> = run.spectra.iter().filter(|sp| sp.source == id).collect();
    reply(
        StatusCode::OK,
        rev,
        json!({ "method": run.method, "source": id, "spectra": spectra }),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExportRequest {
    rev: u64,
}

/// ROI file of one revision, as written by the `identify` subcommand.
#[derive(Serialize)]
struct ExportResponse {
    revision: u64,
    #[serde(flatten)]
    roi: RoiExport,
}

async fn export(State(s): State<SharedSession>, body: Bytes) -> Response {
    let req: ExportRequest = match serde_json::from_slice::<Value>(&body)
        .map_err(|e| (format!("malformed JSON: {e}"), None))
        .and_then(|v| decode(v, ""))
    {
        Ok(r) => r,
        Err((msg, field)) => return error_reply(StatusCode::BAD_REQUEST, s.revision(), msg, field),
    };
    let Some(run) = s.run(req.rev) else {
        return error_reply(StatusCode::NOT_FOUND, req.rev, format!("unknown revision {}", req.rev), None);
    };
    match roi_export(&s.parts, &run.result) {
        Ok(roi) => {
            let body = serde_json::to_value(ExportResponse { revision: req.rev, roi }).expect("ROI serializes");
            reply(StatusCode::OK, req.rev, body)
        }
        Err(e) => error_reply(StatusCode::INTERNAL_SERVER_ERROR, req.rev, e.to_string(), None),
    }
}

/// Serves `session` until Ctrl-C.
pub async fn serve(session: Session, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let app = router(Arc::new(session), static_dir);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
