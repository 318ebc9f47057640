//! Cross-lingual parity from parallel corpora, per-language optima and
//! parity-weighted sampling mixes.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isoflop::Isoflop3D;

/// One line of a parallel corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelSentence {
    pub sentence_id: String,
    pub language: String,
    /// UTF-8 byte length of the sentence.
    pub bytes: u64,
}

/// Reads `sentence_id<TAB>language<TAB>text` lines. Blank lines are skipped.
pub fn parse_parallel_tsv<R: Read>(mut source: R) -> Result<Vec<ParallelSentence>> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::Parse {
            line: 0,
            field: "text".into(),
            message: e.to_string(),
        })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let mut next = |field: &str| {
            parts.next().ok_or_else(|| Error::Parse {
                line: i + 1,
                field: field.into(),
                message: "expected sentence_id<TAB>language<TAB>text".into(),
            })
        };
        let id = next("sentence_id")?;
        let language = next("language")?;
        let sentence = next("text")?;
        out.push(ParallelSentence {
            sentence_id: id.to_string(),
            language: language.to_string(),
            bytes: sentence.len() as u64,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityTable {
    pub base_language: String,
    pub entries: BTreeMap<String, f64>,
    pub n_sentences: BTreeMap<String, usize>,
}

impl ParityTable {
    pub fn get(&self, language: &str) -> Option<f64> {
        self.entries.get(language).copied()
    }
}

/// `parity(l) = Σ bytes_l / Σ bytes_base` over the shared sentence ids.
pub fn estimate_parity(parallel: &[ParallelSentence], base: &str) -> Result<ParityTable> {
    let mut by_lang: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    for s in parallel {
        let ids = by_lang.entry(&s.language).or_default();
        if ids.insert(&s.sentence_id, s.bytes).is_some() {
            return Err(Error::validation(
                "sentence_id",
                format!("duplicate id `{}` for language `{}`", s.sentence_id, s.language),
            ));
        }
    }
    let base_ids = by_lang
        .get(base)
        .ok_or_else(|| Error::Domain(format!("base language `{base}` not in corpus")))?;
    let base_set: BTreeSet<&str> = base_ids.keys().copied().collect();

    let mut missing = Vec::new();
    for (lang, ids) in &by_lang {
        let set: BTreeSet<&str> = ids.keys().copied().collect();
        missing.extend(base_set.difference(&set).map(|id| format!("{lang}:{id}")));
        missing.extend(set.difference(&base_set).map(|id| format!("{base}:{id}")));
    }
    if !missing.is_empty() {
        return Err(Error::Alignment { missing });
    }

    let base_total: u64 = base_ids.values().sum();
    if base_total == 0 {
        return Err(Error::Domain(format!("base language `{base}` has zero bytes")));
    }
    let mut entries = BTreeMap::new();
    let mut n_sentences = BTreeMap::new();
    for (lang, ids) in &by_lang {
        let total: u64 = ids.values().sum();
        let parity = if *lang == base { 1.0 } else { total as f64 / base_total as f64 };
        if !(parity > 0.0) {
            return Err(Error::Domain(format!("language `{lang}` has zero bytes")));
        }
        entries.insert(lang.to_string(), parity);
        n_sentences.insert(lang.to_string(), ids.len());
    }
    Ok(ParityTable {
        base_language: base.to_string(),
        entries,
        n_sentences,
    })
}

/// Inserts a `0x00` after every byte, exactly doubling the length.
pub fn inflate_english_x2(bytes: &[u8]) -> Vec<u8> {
    bytes.iter().flat_map(|&b| [b, 0x00]).collect()
}

/// Inverse of [`inflate_english_x2`].
pub fn strip_dummy_bytes(bytes: &[u8]) -> Result<Vec<u8>> {
    if !bytes.len().is_multiple_of(2) || bytes.chunks(2).any(|pair| pair[1] != 0x00) {
        return Err(Error::validation("bytes", "input is not a doubled byte stream"));
    }
    Ok(bytes.iter().step_by(2).copied().collect())
}

/// Adds an inflated copy of `language` under `<language>-x2`.
pub fn with_inflated(parallel: &[ParallelSentence], language: &str) -> Vec<ParallelSentence> {
    let extra: Vec<ParallelSentence> = parallel
        .iter()
        .filter(|s| s.language == language)
        .map(|s| ParallelSentence {
            sentence_id: s.sentence_id.clone(),
            language: format!("{language}-x2"),
            bytes: 2 * s.bytes,
        })
        .collect();
    parallel.iter().cloned().chain(extra).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageRow {
    pub language: String,
    pub parity: f64,
    pub opt_bpp: f64,
    pub opt_compression: f64,
    pub min_loss: f64,
    pub bpp_ratio: f64,
    pub compression_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageReport {
    pub base_language: String,
    pub rows: Vec<LanguageRow>,
}

impl LanguageReport {
    pub fn row(&self, language: &str) -> Option<&LanguageRow> {
        self.rows.iter().find(|r| r.language == language)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("language,parity,opt_bpp,opt_compression,min_bpb,bpp_ratio,compression_ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.2},{:.1},{:.2},{:.3},{:.2},{:.2}\n",
                r.language, r.parity, r.opt_bpp, r.opt_compression, r.min_loss, r.bpp_ratio, r.compression_ratio
            ));
        }
        out
    }
}

/// Per-language optima with parity attached, ordered by parity.
pub fn language_report(fits: &[(String, Isoflop3D)], parity: &ParityTable) -> Result<LanguageReport> {
    let base = &parity.base_language;
    let base_fit = fits
        .iter()
        .find(|(l, _)| l == base)
        .map(|(_, f)| f)
        .ok_or_else(|| Error::Domain(format!("no fit for base language `{base}`")))?;
    let mut rows = fits
        .iter()
        .map(|(lang, fit)| {
            let p = parity
                .get(lang)
                .ok_or_else(|| Error::Domain(format!("no parity entry for `{lang}`")))?;
            Ok(LanguageRow {
                language: lang.clone(),
                parity: p,
                opt_bpp: fit.opt_bpp,
                opt_compression: fit.opt_compression,
                min_loss: fit.opt_loss,
                bpp_ratio: fit.opt_bpp / base_fit.opt_bpp,
                compression_ratio: fit.opt_compression / base_fit.opt_compression,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.parity.total_cmp(&b.parity).then_with(|| a.language.cmp(&b.language)));
    Ok(LanguageReport {
        base_language: base.clone(),
        rows,
    })
}

/// Sampling weights proportional to parity.
pub fn mix_weights(parity: &ParityTable) -> Result<BTreeMap<String, f64>> {
    if parity.entries.is_empty() {
        return Err(Error::Domain("empty parity table".into()));
    }
    let total: f64 = parity.entries.values().sum();
    Ok(parity
        .entries
        .iter()
        .map(|(l, p)| (l.clone(), p / total))
        .collect())
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData("need two equal-length samples of size ≥ 2".into()));
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::InsufficientVariation("constant ranks".into()));
    }
    Ok(cov / (vx * vy).sqrt())
}
