use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use fieldvoice_core::eval::{CerProfile, PreferenceChoice};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::campaign::{
    validate_definition, Campaign, CampaignBody, CampaignDefinition, CampaignKind, PREFERENCE_INSTRUCTIONS,
    TRANSCRIPTION_INSTRUCTIONS,
};
use crate::{FieldError, ListenError};

pub const LOG_FILE: &str = "events.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub campaign: String,
    pub item: String,
    pub session: String,
    /// True when the item's `b` clip is presented as "A".
    pub swapped: bool,
    pub issued_at_ms: u64,
}

/// Answer as posted by a client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Choice { choice: String },
    Transcription { transcription: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoredAnswer {
    Choice(PreferenceChoice),
    Transcription(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub task: String,
    pub campaign: String,
    pub item: String,
    pub session: String,
    pub answer: StoredAnswer,
    pub received_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    CampaignCreated { campaign: Campaign, at_ms: u64 },
    CampaignClosed { id: String, at_ms: u64 },
    TaskIssued { task: Task },
    ResponseReceived { response: Response },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

/// What an evaluator's client sees. System labels and reference texts are
/// never included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextTask {
    Task {
        task_id: String,
        campaign: String,
        item: String,
        #[serde(rename = "type")]
        kind: CampaignKind,
        instructions: String,
        /// In presentation order: `[A, B]` or a single clip.
        audio: Vec<String>,
        progress: Progress,
    },
    Done {
        progress: Progress,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: CampaignKind,
    pub instructions: String,
    pub open: bool,
    pub items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub campaigns: usize,
    pub tasks: usize,
    pub responses: usize,
    /// Responses whose task was never issued (or issued later).
    pub orphans: Vec<String>,
    /// Tasks answered more than once.
    pub duplicates: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.orphans.is_empty() && self.duplicates.is_empty()
    }
}

#[derive(Default)]
struct SessionState {
    issued: Vec<String>,
    pending: Option<String>,
}

#[derive(Default)]
pub(crate) struct State {
    pub(crate) campaigns: BTreeMap<String, Arc<Campaign>>,
    pub(crate) tasks: HashMap<String, Task>,
    sessions: HashMap<(String, String), SessionState>,
    pub(crate) responses: HashMap<String, Response>,
    /// Task ids in the order their responses arrived.
    pub(crate) response_order: Vec<String>,
    created: usize,
}

impl State {
    fn apply(&mut self, event: Event) {
        match event {
            Event::CampaignCreated { campaign, .. } => {
                self.created += 1;
                self.campaigns.insert(campaign.id.clone(), Arc::new(campaign));
            }
            Event::CampaignClosed { id, .. } => {
                if let Some(c) = self.campaigns.get_mut(&id) {
                    Arc::make_mut(c).open = false;
                }
            }
            Event::TaskIssued { task } => {
                let s = self.sessions.entry((task.campaign.clone(), task.session.clone())).or_default();
                s.issued.push(task.item.clone());
                s.pending = Some(task.id.clone());
                self.tasks.insert(task.id.clone(), task);
            }
            Event::ResponseReceived { response } => {
                if let Some(s) = self.sessions.get_mut(&(response.campaign.clone(), response.session.clone())) {
                    if s.pending.as_deref() == Some(response.task.as_str()) {
                        s.pending = None;
                    }
                }
                self.response_order.push(response.task.clone());
                self.responses.insert(response.task.clone(), response);
            }
        }
    }
}

struct Inner {
    state: State,
    log: File,
}

/// Campaign store and task issuer. All writes go through one lock, which
/// also serializes appends to the event log.
pub struct ListenService {
    data_dir: PathBuf,
    audio_dir: PathBuf,
    inner: Mutex<Inner>,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

fn digest(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn session_ok(s: &str) -> bool {
    !s.trim().is_empty() && s.len() <= 128 && !s.chars().any(char::is_control)
}

fn read_events(path: &Path) -> Result<Vec<Event>, ListenError> {
    if !path.exists() {
        return Ok(vec![]);
    }
    let text = std::fs::read_to_string(path)?;
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut events = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(e) => events.push(e),
            // a torn final write from a crash is dropped
            Err(_) if i + 1 == lines.len() && !complete => break,
            Err(e) => {
                return Err(ListenError::CorruptLog {
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(events)
}

impl ListenService {
    /// Open (or create) the store in `data_dir`, replaying its log.
    pub fn open(data_dir: impl Into<PathBuf>, audio_dir: impl Into<PathBuf>) -> Result<Self, ListenError> {
        let data_dir = data_dir.into();
        std::fs::create_dir_all(&data_dir)?;
        let path = data_dir.join(LOG_FILE);
        let events = read_events(&path)?;
        // rewrite a torn tail so the next append starts on a fresh line
        let mut valid = String::new();
        let mut state = State::default();
        for e in events {
            valid.push_str(&serde_json::to_string(&e)?);
            valid.push('\n');
            state.apply(e);
        }
        if path.exists() && std::fs::read_to_string(&path)? != valid {
            std::fs::write(&path, &valid)?;
        }
        let log = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            data_dir,
            audio_dir: audio_dir.into(),
            inner: Mutex::new(Inner { state, log }),
        })
    }

    pub fn audio_dir(&self) -> &Path {
        &self.audio_dir
    }

    pub fn log_path(&self) -> PathBuf {
        self.data_dir.join(LOG_FILE)
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        // a panic mid-request cannot leave the state half-applied: events
        // are applied only after the append succeeds
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn commit(inner: &mut Inner, event: Event) -> Result<(), ListenError> {
        let mut line = serde_json::to_string(&event)?;
        line.push('\n');
        inner.log.write_all(line.as_bytes())?;
        inner.log.sync_data()?;
        inner.state.apply(event);
        Ok(())
    }

    pub fn create_campaign(&self, def: CampaignDefinition) -> Result<String, ListenError> {
        validate_definition(&def, &self.audio_dir)?;
        if let CampaignBody::Transcription { items } = &def.body {
            let empty: Vec<FieldError> = items
                .iter()
                .enumerate()
                .filter(|(_, it)| CerProfile::strict().apply(&it.reference).is_empty())
                .map(|(i, _)| FieldError {
                    field: format!("items[{i}].reference"),
                    message: "reference has no characters left after normalization".into(),
                })
                .collect();
            if !empty.is_empty() {
                return Err(ListenError::InvalidDefinition(empty));
            }
        }
        let mut inner = self.lock();
        let id = match &def.id {
            Some(id) => id.clone(),
            None => {
                let body = serde_json::to_vec(&def)?;
                let n = inner.state.created.to_le_bytes();
                format!("c{}", &hex(&digest(&[&body, &n]))[..10])
            }
        };
        if inner.state.campaigns.contains_key(&id) {
            return Err(ListenError::DuplicateCampaign(id));
        }
        let seed = def
            .seed
            .unwrap_or_else(|| u64::from_le_bytes(digest(&[id.as_bytes()])[..8].try_into().expect("8 bytes")));
        let instructions = def.instructions.clone().unwrap_or_else(|| {
            match def.body {
                CampaignBody::Preference { .. } => PREFERENCE_INSTRUCTIONS,
                CampaignBody::Transcription { .. } => TRANSCRIPTION_INSTRUCTIONS,
            }
            .to_string()
        });
        let campaign = Campaign {
            id: id.clone(),
            instructions,
            seed,
            body: def.body,
            open: true,
        };
        Self::commit(&mut inner, Event::CampaignCreated { campaign, at_ms: now_ms() })?;
        Ok(id)
    }

    pub fn close_campaign(&self, id: &str) -> Result<(), ListenError> {
        let mut inner = self.lock();
        let c = inner.state.campaigns.get(id).ok_or_else(|| ListenError::UnknownCampaign(id.into()))?;
        if c.open {
            Self::commit(
                &mut inner,
                Event::CampaignClosed {
                    id: id.into(),
                    at_ms: now_ms(),
                },
            )?;
        }
        Ok(())
    }

    pub fn campaign(&self, id: &str) -> Result<Arc<Campaign>, ListenError> {
        self.lock().state.campaigns.get(id).cloned().ok_or_else(|| ListenError::UnknownCampaign(id.into()))
    }

    pub fn summary(&self, id: &str) -> Result<CampaignSummary, ListenError> {
        let c = self.campaign(id)?;
        Ok(CampaignSummary {
            id: c.id.clone(),
            kind: c.kind(),
            instructions: c.instructions.clone(),
            open: c.open,
            items: c.item_ids().into_iter().map(String::from).collect(),
        })
    }

    pub fn campaign_ids(&self) -> Vec<String> {
        self.lock().state.campaigns.keys().cloned().collect()
    }

    fn view(c: &Campaign, task: &Task, done: usize) -> NextTask {
        let idx = c.item_ids().iter().position(|i| *i == task.item).expect("task item belongs to its campaign");
        let mut audio: Vec<String> = c.audio_of(idx).into_iter().map(|a| format!("/audio/{a}")).collect();
        if task.swapped {
            audio.reverse();
        }
        NextTask::Task {
            task_id: task.id.clone(),
            campaign: c.id.clone(),
            item: task.item.clone(),
            kind: c.kind(),
            instructions: c.instructions.clone(),
            audio,
            progress: Progress { done, total: c.len() },
        }
    }

    /// The session's pending task, or a fresh one for an item it has not
    /// seen, or `Done`.
    pub fn next_task(&self, campaign: &str, session: &str) -> Result<NextTask, ListenError> {
        if !session_ok(session) {
            return Err(ListenError::InvalidSession);
        }
        let mut inner = self.lock();
        let c = inner
            .state
            .campaigns
            .get(campaign)
            .cloned()
            .ok_or_else(|| ListenError::UnknownCampaign(campaign.into()))?;
        if !c.open {
            return Err(ListenError::Closed(campaign.into()));
        }
        let key = (campaign.to_string(), session.to_string());
        let (issued, pending) = match inner.state.sessions.get(&key) {
            Some(s) => (s.issued.clone(), s.pending.clone()),
            None => (vec![], None),
        };
        let answered = issued.len() - usize::from(pending.is_some());
        if let Some(t) = pending {
            return Ok(Self::view(&c, &inner.state.tasks[&t], answered));
        }
        let seen: HashSet<&str> = issued.iter().map(String::as_str).collect();
        let unserved: Vec<&str> = c.item_ids().into_iter().filter(|i| !seen.contains(i)).collect();
        if unserved.is_empty() {
            return Ok(NextTask::Done {
                progress: Progress {
                    done: answered,
                    total: c.len(),
                },
            });
        }
        // one generator per draw, so issuance does not depend on how other
        // sessions interleave or on restarts
        let material = digest(&[&c.seed.to_le_bytes(), session.as_bytes(), &(issued.len() as u64).to_le_bytes()]);
        let mut rng = ChaCha8Rng::from_seed(material);
        let item = unserved[rng.random_range(0..unserved.len())].to_string();
        let swapped = c.kind() == CampaignKind::Preference && rng.random_bool(0.5);
        let task = Task {
            id: hex(&digest(&[campaign.as_bytes(), session.as_bytes(), item.as_bytes()])[..8]),
            campaign: campaign.into(),
            item,
            session: session.into(),
            swapped,
            issued_at_ms: now_ms(),
        };
        let view = Self::view(&c, &task, answered);
        Self::commit(&mut inner, Event::TaskIssued { task })?;
        Ok(view)
    }

    pub fn submit(&self, task_id: &str, session: &str, answer: Answer) -> Result<Response, ListenError> {
        let mut inner = self.lock();
        let task = inner.state.tasks.get(task_id).cloned().ok_or_else(|| ListenError::UnknownTask(task_id.into()))?;
        if task.session != session {
            return Err(ListenError::WrongSession(task_id.into()));
        }
        if inner.state.responses.contains_key(task_id) {
            return Err(ListenError::Duplicate(task_id.into()));
        }
        let c = inner.state.campaigns[&task.campaign].clone();
        if !c.open {
            return Err(ListenError::Closed(c.id.clone()));
        }
        let answer = match (c.kind(), answer) {
            (CampaignKind::Preference, Answer::Choice { choice }) => {
                StoredAnswer::Choice(choice.parse().map_err(ListenError::Domain)?)
            }
            (CampaignKind::Transcription, Answer::Transcription { transcription }) => {
                if transcription.trim().is_empty() {
                    return Err(ListenError::Domain("empty transcription".into()));
                }
                StoredAnswer::Transcription(transcription)
            }
            (CampaignKind::Preference, Answer::Transcription { .. }) => {
                return Err(ListenError::Domain("preference tasks take a choice: A, B or No difference".into()))
            }
            (CampaignKind::Transcription, Answer::Choice { .. }) => {
                return Err(ListenError::Domain("transcription tasks take a transcription".into()))
            }
        };
        let response = Response {
            task: task.id.clone(),
            campaign: task.campaign.clone(),
            item: task.item.clone(),
            session: task.session.clone(),
            answer,
            received_at_ms: now_ms(),
        };
        Self::commit(
            &mut inner,
            Event::ResponseReceived {
                response: response.clone(),
            },
        )?;
        Ok(response)
    }

    /// Tasks and responses of one campaign, in arrival order.
    pub(crate) fn snapshot(&self, campaign: &str) -> Result<(Arc<Campaign>, Vec<(Task, Response)>), ListenError> {
        let inner = self.lock();
        let c = inner
            .state
            .campaigns
            .get(campaign)
            .cloned()
            .ok_or_else(|| ListenError::UnknownCampaign(campaign.into()))?;
        let rows = inner
            .state
            .response_order
            .iter()
            .map(|t| &inner.state.responses[t])
            .filter(|r| r.campaign == campaign)
            .map(|r| (inner.state.tasks[&r.task].clone(), r.clone()))
            .collect();
        Ok((c, rows))
    }

    /// Re-read the log from disk and check that every response follows the
    /// issue of its task and that no task is answered twice.
    pub fn audit(&self) -> Result<AuditReport, ListenError> {
        let _guard = self.lock();
        let events = read_events(&self.log_path())?;
        let mut report = AuditReport {
            campaigns: 0,
            tasks: 0,
            responses: 0,
            orphans: vec![],
            duplicates: vec![],
        };
        let mut issued = HashSet::new();
        let mut answered = HashSet::new();
        for e in events {
            match e {
                Event::CampaignCreated { .. } => report.campaigns += 1,
                Event::CampaignClosed { .. } => {}
                Event::TaskIssued { task } => {
                    report.tasks += 1;
                    issued.insert(task.id);
                }
                Event::ResponseReceived { response } => {
                    report.responses += 1;
                    if !issued.contains(&response.task) {
                        report.orphans.push(response.task.clone());
                    }
                    if !answered.insert(response.task.clone()) {
                        report.duplicates.push(response.task);
                    }
                }
            }
        }
        Ok(report)
    }
}
