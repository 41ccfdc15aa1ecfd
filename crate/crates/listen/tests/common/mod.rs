#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;

use fieldvoice_listen::{
    CampaignBody, CampaignDefinition, NextTask, PreferencePair, SystemClip, TranscriptionItem,
};

/// `found/pN.wav` and `created/pN.wav` for N in 0..n.
pub fn audio_fixture(dir: &Path, n: usize) {
    for sys in ["found", "created"] {
        std::fs::create_dir_all(dir.join(sys)).unwrap();
        for i in 0..n {
            std::fs::write(dir.join(sys).join(format!("p{i}.wav")), format!("RIFF{sys}{i}").repeat(20)).unwrap();
        }
    }
}

pub fn preference(n: usize, seed: u64) -> CampaignDefinition {
    CampaignDefinition {
        id: None,
        instructions: None,
        seed: Some(seed),
        body: CampaignBody::Preference {
            items: (0..n)
                .map(|i| PreferencePair {
                    id: format!("p{i}"),
                    a: SystemClip {
                        audio: format!("found/p{i}.wav"),
                        system: "Found".into(),
                    },
                    b: SystemClip {
                        audio: format!("created/p{i}.wav"),
                        system: "Created".into(),
                    },
                })
                .collect(),
        },
    }
}

pub fn transcription(refs: &[&str]) -> CampaignDefinition {
    CampaignDefinition {
        id: Some("luo-transcribe".into()),
        instructions: None,
        seed: Some(1),
        body: CampaignBody::Transcription {
            items: refs
                .iter()
                .enumerate()
                .map(|(i, r)| TranscriptionItem {
                    id: format!("p{i}"),
                    audio: format!("found/p{i}.wav"),
                    reference: r.to_string(),
                })
                .collect(),
        },
    }
}

/// Which system an audio URL belongs to, as an evaluator with perfect
/// hearing would know.
pub fn system_of(url: &str) -> &'static str {
    if url.contains("/found/") {
        "Found"
    } else {
        "Created"
    }
}

/// The choice string that selects `want` (None = no difference) on a task.
pub fn choose(task: &NextTask, want: Option<&str>) -> String {
    match (task, want) {
        (_, None) => "No difference".into(),
        (NextTask::Task { audio, .. }, Some(sys)) => {
            if system_of(&audio[0]) == sys { "A".into() } else { "B".into() }
        }
        (NextTask::Done { .. }, _) => panic!("no task"),
    }
}

pub fn task_id(t: &NextTask) -> String {
    match t {
        NextTask::Task { task_id, .. } => task_id.clone(),
        NextTask::Done { .. } => panic!("done"),
    }
}

pub fn counts<'a>(picks: impl Iterator<Item = Option<&'a str>>) -> HashMap<&'a str, usize> {
    let mut m = HashMap::new();
    for p in picks {
        *m.entry(p.unwrap_or("Same")).or_insert(0) += 1;
    }
    m
}
