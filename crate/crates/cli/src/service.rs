//! Case-session HTTP/JSON API. [`Service::handle`] maps a transport-neutral
//! [`Request`] to a [`Response`]; [`router`] adapts it to axum.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use juris_core::engine::{parse_constraint, parse_fact, ScenarioSet, SolvedCase, session_program};
use juris_core::kb::Kb;
use juris_core::syntax::{parse_atom, Atom, Rule};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const ARTICLES_SCHEMA: &str = "juris.kb-articles/1";
pub const SESSION_SCHEMA: &str = "juris.case-session/1";
pub const ERROR_SCHEMA: &str = "juris.error/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
    Delete,
    Other,
}

impl Method {
    pub fn parse(s: &str) -> Self {
        match s.to_ascii_uppercase().as_str() {
            "GET" => Method::Get,
            "POST" => Method::Post,
            "DELETE" => Method::Delete,
            _ => Method::Other,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Request {
    pub method: Method,
    pub path: String,
    pub query: BTreeMap<String, String>,
    pub body: Vec<u8>,
}

impl Request {
    pub fn new(method: Method, path_and_query: &str, body: impl Into<Vec<u8>>) -> Self {
        let (path, q) = path_and_query.split_once('?').unwrap_or((path_and_query, ""));
        let query = url::form_urlencoded::parse(q.as_bytes()).into_owned().collect();
        Request { method, path: path.to_string(), query, body: body.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Response {
    pub status: u16,
    pub body: Value,
}

impl Response {
    fn ok(body: Value) -> Self {
        Response { status: 200, body }
    }

    fn error(status: u16, message: impl Into<String>) -> Self {
        Response { status, body: json!({ "schema": ERROR_SCHEMA, "status": status, "error": message.into() }) }
    }
}

/// The persisted part of a session.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SessionDoc {
    pub schema: String,
    pub id: String,
    pub facts: Vec<String>,
    pub constraints: Vec<String>,
}

struct Cached {
    solved: SolvedCase,
    scenarios: ScenarioSet,
}

#[derive(Default)]
struct Session {
    id: String,
    facts: Vec<Atom>,
    constraints: Vec<(String, Rule)>,
    /// Dropped whenever facts or constraints change.
    cache: Option<Arc<Cached>>,
}

impl Session {
    fn doc(&self) -> SessionDoc {
        SessionDoc {
            schema: SESSION_SCHEMA.to_string(),
            id: self.id.clone(),
            facts: self.facts.iter().map(Atom::to_string).collect(),
            constraints: self.constraints.iter().map(|(t, _)| t.clone()).collect(),
        }
    }

    fn add_fact(&mut self, a: Atom) {
        if !self.facts.contains(&a) {
            self.facts.push(a);
        }
        self.cache = None;
    }
}

pub struct Service {
    kb: Arc<Kb>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    snapshots: Option<PathBuf>,
}

#[derive(Deserialize)]
struct FactsBody {
    #[serde(default)]
    facts: Vec<String>,
    #[serde(default)]
    fact: Option<String>,
}

impl FactsBody {
    fn all(self) -> Vec<String> {
        self.facts.into_iter().chain(self.fact).collect()
    }
}

#[derive(Deserialize)]
struct ConstraintBody {
    constraint: String,
}

#[derive(Default, Deserialize)]
struct CreateBody {
    #[serde(default)]
    facts: Vec<String>,
    #[serde(default)]
    constraints: Vec<String>,
}

fn body_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, Response> {
    serde_json::from_slice(body).map_err(|e| Response::error(422, format!("malformed request body: {e}")))
}

fn parse_facts(texts: &[String]) -> Result<Vec<Atom>, Response> {
    texts.iter().map(|t| parse_fact(t).map_err(|e| Response::error(422, e.to_string()))).collect()
}

fn parse_constraints(texts: &[String]) -> Result<Vec<(String, Rule)>, Response> {
    texts
        .iter()
        .map(|t| parse_constraint(t).map(|r| (t.trim().to_string(), r)).map_err(|e| Response::error(422, e.to_string())))
        .collect()
}

impl Service {
    pub fn new(kb: Kb) -> Self {
        Service { kb: Arc::new(kb), sessions: Mutex::new(HashMap::new()), snapshots: None }
    }

    /// Persists sessions as JSON documents under `dir` and restores any
    /// found there.
    pub fn with_snapshots(mut self, dir: PathBuf) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        let mut restored = HashMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let Ok(doc) = serde_json::from_str::<SessionDoc>(&fs::read_to_string(&path)?) else { continue };
            let (Ok(facts), Ok(constraints)) = (parse_facts(&doc.facts), parse_constraints(&doc.constraints)) else {
                continue;
            };
            let s = Session { id: doc.id.clone(), facts, constraints, cache: None };
            restored.insert(doc.id, Arc::new(Mutex::new(s)));
        }
        self.sessions = Mutex::new(restored);
        self.snapshots = Some(dir);
        Ok(self)
    }

    pub fn kb(&self) -> &Kb {
        &self.kb
    }

    fn persist(&self, s: &Session) {
        if let Some(dir) = &self.snapshots {
            let text = serde_json::to_string_pretty(&s.doc()).expect("serializable");
            if let Err(e) = fs::write(dir.join(format!("{}.json", s.id)), text) {
                eprintln!("warning: cannot write snapshot for {}: {e}", s.id);
            }
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, Response> {
        self.sessions
            .lock()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| Response::error(404, format!("unknown case session `{id}`")))
    }

    fn solved(&self, s: &mut Session) -> Result<Arc<Cached>, Response> {
        if let Some(c) = &s.cache {
            return Ok(c.clone());
        }
        let constraints: Vec<Rule> = s.constraints.iter().map(|(_, r)| r.clone()).collect();
        let program = session_program(&self.kb.program, &s.facts, &constraints);
        let solved = SolvedCase::solve(&program, None).map_err(|e| Response::error(422, e.to_string()))?;
        let scenarios = solved.scenarios(&self.kb).map_err(|e| Response::error(500, e.to_string()))?;
        let c = Arc::new(Cached { solved, scenarios });
        s.cache = Some(c.clone());
        Ok(c)
    }

    pub fn handle(&self, req: &Request) -> Response {
        match self.route(req) {
            Ok(r) | Err(r) => r,
        }
    }

    fn route(&self, req: &Request) -> Result<Response, Response> {
        let parts: Vec<&str> = req.path.trim_matches('/').split('/').filter(|p| !p.is_empty()).collect();
        match (req.method, parts.as_slice()) {
            (Method::Get, ["kb", "articles"]) => Ok(self.articles()),
            (Method::Post, ["cases"]) => self.create(req),
            (Method::Get, ["cases", id]) => {
                let s = self.session(id)?;
                let s = s.lock().expect("session");
                Ok(Response::ok(serde_json::to_value(s.doc()).expect("serializable")))
            }
            (Method::Delete, ["cases", id]) => {
                let removed = self.sessions.lock().expect("session table").remove(*id);
                if removed.is_none() {
                    return Err(Response::error(404, format!("unknown case session `{id}`")));
                }
                if let Some(dir) = &self.snapshots {
                    let _ = fs::remove_file(dir.join(format!("{id}.json")));
                }
                Ok(Response::ok(json!({ "schema": SESSION_SCHEMA, "id": id, "deleted": true })))
            }
            (Method::Post, ["cases", id, "facts"]) => {
                let facts = parse_facts(&body_json::<FactsBody>(&req.body)?.all())?;
                self.mutate(id, |s| facts.into_iter().for_each(|a| s.add_fact(a)))
            }
            (Method::Delete, ["cases", id, "facts"]) => {
                let facts = parse_facts(&body_json::<FactsBody>(&req.body)?.all())?;
                self.mutate(id, |s| {
                    s.facts.retain(|f| !facts.contains(f));
                    s.cache = None;
                })
            }
            (Method::Post, ["cases", id, "constraints"]) => {
                let c = body_json::<ConstraintBody>(&req.body)?;
                let parsed = parse_constraints(&[c.constraint])?;
                self.mutate(id, |s| {
                    s.constraints.extend(parsed);
                    s.cache = None;
                })
            }
            (Method::Get, ["cases", id, "scenarios"]) => {
                let s = self.session(id)?;
                let mut s = s.lock().expect("session");
                let c = self.solved(&mut s)?;
                if c.scenarios.inconsistent {
                    return Err(Response {
                        status: 409,
                        body: json!({
                            "schema": c.scenarios.schema,
                            "status": "inconsistent",
                            "error": "no stable model: the facts or evidence constraints contradict the knowledge base",
                        }),
                    });
                }
                Ok(Response::ok(serde_json::to_value(&c.scenarios).expect("serializable")))
            }
            (Method::Get, ["cases", id, "scenarios", k, "explanation"]) => self.explanation(id, k, &req.query),
            (Method::Get | Method::Post | Method::Delete, _) => Err(Response::error(404, format!("no route for {}", req.path))),
            (Method::Other, _) => Err(Response::error(405, "method not allowed")),
        }
    }

    fn articles(&self) -> Response {
        let sets: Vec<Value> = self
            .kb
            .sets
            .iter()
            .map(|s| json!({ "id": s.id, "articles": s.articles, "rules": s.program.len() }))
            .collect();
        let vocabulary: Vec<Value> = self
            .kb
            .program
            .signatures()
            .iter()
            .map(|s| json!({ "predicate": s.name, "arity": s.arity }))
            .collect();
        let verdicts: Vec<String> = self.kb.verdicts().iter().map(|s| s.to_string()).collect();
        Response::ok(json!({ "schema": ARTICLES_SCHEMA, "sets": sets, "vocabulary": vocabulary, "verdicts": verdicts }))
    }

    fn create(&self, req: &Request) -> Result<Response, Response> {
        let body: CreateBody = if req.body.iter().all(u8::is_ascii_whitespace) { CreateBody::default() } else { body_json(&req.body)? };
        let facts = parse_facts(&body.facts)?;
        let constraints = parse_constraints(&body.constraints)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mut s = Session { id: id.clone(), constraints, ..Default::default() };
        facts.into_iter().for_each(|a| s.add_fact(a));
        let doc = s.doc();
        self.persist(&s);
        self.sessions.lock().expect("session table").insert(id, Arc::new(Mutex::new(s)));
        Ok(Response { status: 201, body: serde_json::to_value(doc).expect("serializable") })
    }

    fn mutate(&self, id: &str, f: impl FnOnce(&mut Session)) -> Result<Response, Response> {
        let s = self.session(id)?;
        let mut s = s.lock().expect("session");
        f(&mut s);
        self.persist(&s);
        Ok(Response::ok(serde_json::to_value(s.doc()).expect("serializable")))
    }

    fn explanation(&self, id: &str, k: &str, query: &BTreeMap<String, String>) -> Result<Response, Response> {
        let s = self.session(id)?;
        let c = {
            let mut s = s.lock().expect("session");
            self.solved(&mut s)?
        };
        let k: usize = k.parse().map_err(|_| Response::error(404, format!("unknown scenario `{k}`")))?;
        if k >= c.solved.models.len() {
            return Err(Response::error(404, format!("unknown scenario `{k}`")));
        }
        let q = match query.get("query") {
            Some(q) => Some(parse_atom(q.trim().trim_end_matches('.')).map_err(|e| Response::error(422, e.to_string()))?),
            None => None,
        };
        if let Some(q) = &q {
            if !c.solved.models[k].contains(q) {
                return Err(Response::error(404, format!("atom {q} is not in scenario {k}")));
            }
        }
        match query.get("format").map(String::as_str).unwrap_or("dag") {
            "dag" => {
                let dag = c.solved.dag(k).map_err(|e| Response::error(500, e.to_string()))?;
                let dag = match &q {
                    Some(q) => dag.restricted_to(q).expect("query checked against the model"),
                    None => dag,
                };
                Ok(Response::ok(serde_json::to_value(dag.to_document()).expect("serializable")))
            }
            "tree" => {
                let q = q.ok_or_else(|| Response::error(422, "format=tree needs a query atom"))?;
                let tree = c.solved.tree(k, &q).map_err(|e| Response::error(500, e.to_string()))?;
                let mut v = serde_json::to_value(&tree).expect("serializable");
                v["text"] = Value::String(tree.render());
                Ok(Response::ok(v))
            }
            other => Err(Response::error(422, format!("unknown format `{other}`; use dag or tree"))),
        }
    }
}

/// axum adapter: every request goes through [`Service::handle`] on a
/// blocking thread so solving never stalls the runtime.
pub fn router(service: Arc<Service>) -> axum::Router {
    use axum::body::Bytes;
    use axum::http::{StatusCode, Uri};
    use axum::response::IntoResponse;

    let handler = move |method: axum::http::Method, uri: Uri, body: Bytes| {
        let service = service.clone();
        async move {
            let path = uri.path_and_query().map(|p| p.as_str().to_string()).unwrap_or_else(|| uri.path().to_string());
            let req = Request::new(Method::parse(method.as_str()), &path, body.to_vec());
            let resp = tokio::task::spawn_blocking(move || service.handle(&req))
                .await
                .unwrap_or_else(|e| Response::error(500, e.to_string()));
            let status = StatusCode::from_u16(resp.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (status, axum::Json(resp.body)).into_response()
        }
    };
    axum::Router::new().fallback(handler)
}

/// Serves until the process is stopped.
pub async fn serve(service: Arc<Service>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    serve_on(listener, service).await
}

pub async fn serve_on(listener: tokio::net::TcpListener, service: Arc<Service>) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}
