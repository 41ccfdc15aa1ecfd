//! Python bindings: text normalization, scoring, corpus tools and synthesis.

use std::path::PathBuf;

use fieldvoice_core::audio::{self, AudioClip, FeatureTrack, MfccConfig};
use fieldvoice_core::corpus::{self, SplitOrder, SplitSpec};
use fieldvoice_core::eval::{self, CerProfile, PreferenceChoice, PreferenceItem, PreferenceResponse};
use fieldvoice_core::prompts;
use fieldvoice_core::synth::{SynthWeights, Voice as CoreVoice};
use fieldvoice_core::textnorm::{self, CleanProfile, NormalizedText, WORD_BOUNDARY};
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

create_exception!(fieldvoice, FieldvoiceError, PyValueError, "Invalid input or data for a fieldvoice operation.");

fn err(e: impl std::fmt::Display) -> PyErr {
    FieldvoiceError::new_err(e.to_string())
}

fn io_err(e: std::io::Error) -> PyErr {
    PyOSError::new_err(e.to_string())
}

/// JSON value to the matching Python builtins.
fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, x) in map {
                dict.set_item(k, to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &serde_json::to_value(v).map_err(err)?)
}

/// Grapheme-to-phoneme rules. With no file every letter is its own phone.
#[pyclass(frozen)]
struct G2pTable(textnorm::G2pTable);

#[pymethods]
impl G2pTable {
    #[new]
    #[pyo3(signature = (text=None, language="".to_string()))]
    fn new(text: Option<&str>, language: String) -> PyResult<Self> {
        match text {
            Some(t) => t.parse().map(Self).map_err(err),
            None => Ok(Self(textnorm::G2pTable::identity(language))),
        }
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        std::fs::read_to_string(path).map_err(io_err)?.parse().map(Self).map_err(err)
    }

    /// Phones of `text`, word boundaries dropped.
    fn phones(&self, text: &str) -> Vec<String> {
        textnorm::g2p(text, &self.0).into_iter().filter(|p| p != WORD_BOUNDARY).collect()
    }
}

/// Number words for one language.
#[pyclass(frozen)]
struct NumberDictionary(textnorm::NumberDictionary);

#[pymethods]
impl NumberDictionary {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        std::fs::read_to_string(path).map_err(io_err)?.parse().map(Self).map_err(err)
    }

    fn spell(&self, value: u64) -> Option<String> {
        self.0.spell(value)
    }
}

fn identity() -> textnorm::G2pTable {
    textnorm::G2pTable::identity("")
}

/// Expand numbers and clean `text`; returns `(normalized, phones)`.
#[pyfunction]
#[pyo3(signature = (text, numbers=None, g2p=None, lowercase=false))]
fn normalize(
    text: &str,
    numbers: Option<&NumberDictionary>,
    g2p: Option<&G2pTable>,
    lowercase: bool,
) -> PyResult<(String, Vec<String>)> {
    let profile = CleanProfile {
        lowercase,
        ..CleanProfile::default()
    };
    let fallback = identity();
    let table = g2p.map_or(&fallback, |t| &t.0);
    let n = NormalizedText::new(text, numbers.map(|d| &d.0), &profile, table).map_err(err)?;
    let phones = n.phones.into_iter().filter(|p| p != WORD_BOUNDARY).collect();
    Ok((n.normalized, phones))
}

/// Character error rate; `lenient` forgives word joins, doubled vowels and w/u.
#[pyfunction]
#[pyo3(signature = (reference, hypothesis, lenient=false))]
fn cer(reference: &str, hypothesis: &str, lenient: bool) -> PyResult<f64> {
    let profile = if lenient { CerProfile::lenient() } else { CerProfile::strict() };
    eval::cer(reference, hypothesis, &profile).map(|r| r.cer).map_err(err)
}

#[pyfunction]
fn levenshtein(a: &str, b: &str) -> usize {
    eval::levenshtein(&a.chars().collect::<Vec<_>>(), &b.chars().collect::<Vec<_>>())
}

/// MFCC frames (c0 first) of mono float samples.
#[pyfunction]
fn mfcc(samples: Vec<f32>, sample_rate: u32) -> PyResult<Vec<Vec<f64>>> {
    let clip = AudioClip::new(samples, sample_rate).map_err(err)?;
    Ok(audio::mfcc(&clip, &MfccConfig::default()).map_err(err)?.frames().to_vec())
}

fn track(frames: Vec<Vec<f64>>, includes_c0: bool) -> PyResult<FeatureTrack> {
    FeatureTrack::new(frames, 10.0, 25.0, includes_c0).map_err(err)
}

/// `(total_cost, [(i, j), ...])` of the optimal warping path.
#[pyfunction]
fn dtw(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<(f64, Vec<(usize, usize)>)> {
    let path = audio::dtw(&track(a, false)?, &track(b, false)?).map_err(err)?;
    Ok((path.total_cost, path.pairs))
}

/// Mean mel cepstral distortion in dB. The first column is c0 unless
/// `includes_c0` is false.
#[pyfunction]
#[pyo3(signature = (a, b, align=true, includes_c0=true))]
fn mcd(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, align: bool, includes_c0: bool) -> PyResult<f64> {
    let r = eval::mcd(&track(a, includes_c0)?, &track(b, includes_c0)?, align).map_err(err)?;
    Ok(r.mean_mcd)
}

#[pyfunction]
fn mcd_significant(a: f64, b: f64) -> bool {
    eval::mcd_significant(a, b)
}

/// Manifest-level MCD; returns the full result as a dict.
#[pyfunction]
fn mcd_testset<'py>(py: Python<'py>, reference: PathBuf, synthesized: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let r = eval::mcd_testset(&reference, &synthesized, &MfccConfig::default()).map_err(err)?;
    serialize(py, &r)
}

/// Greedy diphone-coverage selection over `(id, text)` candidates.
#[pyfunction]
#[pyo3(signature = (candidates, count, alpha=prompts::DEFAULT_LENGTH_PENALTY, g2p=None))]
fn select_prompts(
    candidates: Vec<(String, String)>,
    count: usize,
    alpha: f64,
    g2p: Option<&G2pTable>,
) -> PyResult<Vec<String>> {
    let fallback = identity();
    let table = g2p.map_or(&fallback, |t| &t.0);
    let units = prompts::extract_all(&candidates, table).map_err(err)?;
    Ok(prompts::select_prompts(&units, count, alpha).map_err(err)?.selected)
}

/// A corpus manifest.
#[pyclass(frozen)]
struct Manifest {
    inner: corpus::Manifest,
    path: Option<PathBuf>,
}

#[pymethods]
impl Manifest {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let inner = corpus::Manifest::read(&path).map_err(err)?;
        Ok(Self { inner, path: Some(path) })
    }

    #[getter]
    fn license(&self) -> &str {
        &self.inner.license
    }

    #[getter]
    fn language(&self) -> &str {
        &self.inner.language
    }

    fn __len__(&self) -> usize {
        self.inner.utterances.len()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.utterances.iter().map(|u| u.id.clone()).collect()
    }

    fn utterances<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize(py, &self.inner.utterances)
    }

    fn total_duration(&self) -> f64 {
        self.inner.total_duration()
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize(py, &corpus::stats(&self.inner))
    }

    /// Problems found in the file this manifest was read from.
    fn validate(&self) -> PyResult<Vec<String>> {
        let path = self.path.as_ref().ok_or_else(|| err("manifest was not read from a file"))?;
        Ok(corpus::validate(path).map_err(err)?.iter().map(ToString::to_string).collect())
    }

    /// Duration-targeted subsets; each is a list of utterance ids.
    #[pyo3(signature = (minutes, seed=None, nested=true))]
    fn splits(&self, minutes: Vec<f64>, seed: Option<u64>, nested: bool) -> PyResult<Vec<Vec<String>>> {
        let spec = SplitSpec {
            minutes,
            nested,
            order: seed.map_or(SplitOrder::Corpus, |seed| SplitOrder::Random { seed }),
        };
        let splits = corpus::make_splits(&self.inner, &spec).map_err(err)?;
        Ok(splits.iter().map(|m| m.utterances.iter().map(|u| u.id.clone()).collect()).collect())
    }

    fn __repr__(&self) -> String {
        format!("Manifest({} utterances, {:.2} h)", self.inner.utterances.len(), self.inner.total_duration() / 3600.0)
    }
}

/// A unit-selection voice built by `fieldvoice build-voice`.
#[pyclass(frozen)]
struct Voice(CoreVoice);

#[pymethods]
impl Voice {
    #[staticmethod]
    fn open(path: PathBuf) -> PyResult<Self> {
        CoreVoice::open(path).map(Self).map_err(err)
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.0.index.sample_rate
    }

    /// `(samples, sample_rate)` for `text`.
    #[pyo3(signature = (text, g2p=None, join=1.0, target=0.2, crossfade_ms=10.0))]
    fn synthesize(
        &self,
        text: &str,
        g2p: Option<&G2pTable>,
        join: f64,
        target: f64,
        crossfade_ms: f64,
    ) -> PyResult<(Vec<f32>, u32)> {
        let fallback = identity();
        let table = g2p.map_or(&fallback, |t| &t.0);
        let weights = SynthWeights {
            join,
            target,
            crossfade_ms,
        };
        let (clip, _) = self.0.synthesize(text, table, &weights).map_err(err)?;
        let rate = clip.sample_rate();
        Ok((clip.into_samples(), rate))
    }
}

/// Tally A/B responses. `items` are `(id, system_a, system_b)`; responses
/// are `(evaluator, item, swapped, choice)` with choice "a", "b" or "same".
#[pyfunction]
fn tally_preferences<'py>(
    py: Python<'py>,
    items: Vec<(String, String, String)>,
    responses: Vec<(String, String, bool, String)>,
) -> PyResult<Bound<'py, PyAny>> {
    let items: Vec<PreferenceItem> = items
        .into_iter()
        .map(|(id, a, b)| PreferenceItem { id, systems: [a, b] })
        .collect();
    let responses = responses
        .into_iter()
        .map(|(evaluator, item, swapped, choice)| {
            Ok(PreferenceResponse {
                evaluator,
                item,
                swapped,
                choice: choice.parse::<PreferenceChoice>().map_err(err)?,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let tally = eval::tally_preferences(&items, &responses).map_err(err)?;
    let out = serialize(py, &tally)?;
    out.set_item("table", tally.to_string())?;
    Ok(out)
}

#[pymodule]
fn fieldvoice(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FieldvoiceError", m.py().get_type::<FieldvoiceError>())?;
    m.add("MCD_SIGNIFICANCE_DB", eval::MCD_SIGNIFICANCE_DB)?;
    m.add_class::<G2pTable>()?;
    m.add_class::<NumberDictionary>()?;
    m.add_class::<Manifest>()?;
    m.add_class::<Voice>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(cer, m)?)?;
    m.add_function(wrap_pyfunction!(levenshtein, m)?)?;
    m.add_function(wrap_pyfunction!(mfcc, m)?)?;
    m.add_function(wrap_pyfunction!(dtw, m)?)?;
    m.add_function(wrap_pyfunction!(mcd, m)?)?;
    m.add_function(wrap_pyfunction!(mcd_significant, m)?)?;
    m.add_function(wrap_pyfunction!(mcd_testset, m)?)?;
    m.add_function(wrap_pyfunction!(select_prompts, m)?)?;
    m.add_function(wrap_pyfunction!(tally_preferences, m)?)?;
    Ok(())
}
