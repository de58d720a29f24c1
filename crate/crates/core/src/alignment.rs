//! Disagreement between a base transcription and an additional one.
//!
//! Four stages, each a pure function over an [`EditScript`]:
//!
//! 1. [`align`] — word-level Levenshtein alignment.
//! 2. [`refine`] — split uneven replacements by character similarity, then
//!    merge neighbouring insertions/deletions into a replacement when the
//!    concatenated words match better (`"no" + "thing" → "nothing"`).
//! 3. [`drop_script_mismatch_diffs`] and other [`DiffHeuristic`]s — accept
//!    the base variant for differences that are not real disagreements.
//! 4. [`lm_validate`] — keep only the differences a language model prefers
//!    in their additional-model form, jointly over nearby differences.
//!
//! A difference resolved in favour of the base becomes an
//! [`OpKind::Accepted`] op, so spans stay intact for later masking.

use std::borrow::Cow;
use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, Concurrency};
use crate::text::{normalize_word, Normalization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Equal,
    Insert,
    Delete,
    Replace,
    /// A difference dropped by a later stage; the base variant stands.
    Accepted,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiffOp {
    pub kind: OpKind,
    pub base: Range<usize>,
    pub other: Range<usize>,
}

impl DiffOp {
    pub fn new(kind: OpKind, base: Range<usize>, other: Range<usize>) -> Self {
        Self { kind, base, other }
    }

    /// Whether the op still marks a disagreement between the two models.
    pub fn is_difference(&self) -> bool {
        matches!(self.kind, OpKind::Insert | OpKind::Delete | OpKind::Replace)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid edit script: {0}")]
pub struct ScriptError(pub String);

/// Ordered ops covering both word sequences exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct EditScript {
    pub ops: Vec<DiffOp>,
}

impl EditScript {
    pub fn new(ops: Vec<DiffOp>) -> Self {
        Self { ops }
    }

    pub fn base_len(&self) -> usize {
        self.ops.last().map_or(0, |op| op.base.end)
    }

    pub fn other_len(&self) -> usize {
        self.ops.last().map_or(0, |op| op.other.end)
    }

    pub fn differences(&self) -> impl Iterator<Item = &DiffOp> {
        self.ops.iter().filter(|op| op.is_difference())
    }

    pub fn difference_count(&self) -> usize {
        self.differences().count()
    }

    /// Levenshtein cost of the script; equals the word edit distance for
    /// [`align`] output.
    pub fn edit_cost(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op.kind {
                OpKind::Equal | OpKind::Accepted => 0,
                OpKind::Insert => op.other.len(),
                OpKind::Delete => op.base.len(),
                OpKind::Replace => op.base.len().max(op.other.len()),
            })
            .sum()
    }

    /// Checks coverage, span shapes, and equal-span text agreement.
    pub fn validate<B: AsRef<str>, O: AsRef<str>>(
        &self,
        base: &[B],
        other: &[O],
    ) -> Result<(), ScriptError> {
        let (mut bi, mut oi) = (0, 0);
        let mut prev_equal = false;
        for (k, op) in self.ops.iter().enumerate() {
            if op.base.start != bi || op.other.start != oi {
                return Err(ScriptError(format!("op {k} does not continue the previous spans")));
            }
            if op.base.end < op.base.start || op.other.end < op.other.start {
                return Err(ScriptError(format!("op {k} has a reversed span")));
            }
            let (b, o) = (op.base.len(), op.other.len());
            let ok = match op.kind {
                OpKind::Equal => {
                    b == o
                        && b > 0
                        && op.base.clone().zip(op.other.clone()).all(|(i, j)| {
                            normalize_word(base[i].as_ref()) == normalize_word(other[j].as_ref())
                        })
                }
                OpKind::Insert => b == 0 && o > 0,
                OpKind::Delete => b > 0 && o == 0,
                OpKind::Replace => b > 0 && o > 0,
                OpKind::Accepted => b + o > 0,
            };
            if !ok {
                return Err(ScriptError(format!("op {k} ({:?}) violates its shape", op.kind)));
            }
            let is_equal = op.kind == OpKind::Equal;
            if is_equal && prev_equal {
                return Err(ScriptError(format!("ops {} and {k} are both equal", k - 1)));
            }
            prev_equal = is_equal;
            bi = op.base.end;
            oi = op.other.end;
        }
        if bi != base.len() || oi != other.len() {
            return Err(ScriptError(format!(
                "script covers {bi}/{} base and {oi}/{} other words",
                base.len(),
                other.len()
            )));
        }
        Ok(())
    }

    /// Concatenates scripts over consecutive slices of both sequences.
    pub fn concat(parts: impl IntoIterator<Item = EditScript>) -> EditScript {
        let mut ops: Vec<DiffOp> = Vec::new();
        let (mut bo, mut oo) = (0, 0);
        for part in parts {
            let (bl, ol) = (part.base_len(), part.other_len());
            for op in part.ops {
                let shifted = DiffOp::new(
                    op.kind,
                    op.base.start + bo..op.base.end + bo,
                    op.other.start + oo..op.other.end + oo,
                );
                push_coalesced(&mut ops, shifted, &[OpKind::Equal]);
            }
            bo += bl;
            oo += ol;
        }
        EditScript { ops }
    }
}

/// Appends `op`, extending the last op instead when both share a kind listed in `mergeable`.
fn push_coalesced(ops: &mut Vec<DiffOp>, op: DiffOp, mergeable: &[OpKind]) {
    if op.base.is_empty() && op.other.is_empty() {
        return;
    }
    if let Some(last) = ops.last_mut() {
        if last.kind == op.kind && mergeable.contains(&op.kind) {
            last.base.end = op.base.end;
            last.other.end = op.other.end;
            return;
        }
    }
    ops.push(op);
}

const COALESCE_ALL: [OpKind; 4] = [OpKind::Equal, OpKind::Insert, OpKind::Delete, OpKind::Replace];

/// Maps words to integer symbols so the DP compares integers.
/// Words of up to seven bytes pack into the symbol itself (bytes plus length);
/// longer words get a dense id from a map in a separate range.
#[derive(Default)]
struct Interner<'a> {
    long: Option<HashMap<Cow<'a, str>, u64>>,
}

impl<'a> Interner<'a> {
    const LONG: u64 = 0xFF << 56;

    fn symbol(&mut self, word: Cow<'a, str>) -> u64 {
        let bytes = word.as_bytes();
        if bytes.len() <= 7 {
            let packed = bytes.iter().rev().fold(0u64, |acc, &c| acc << 8 | u64::from(c));
            return packed | (bytes.len() as u64) << 56;
        }
        let long = self.long.get_or_insert_with(HashMap::new);
        let next = Self::LONG | long.len() as u64;
        *long.entry(word).or_insert(next)
    }
}

/// Minimum-edit-distance word alignment with unit costs.
///
/// Words compare equal after case folding and punctuation stripping.
/// Backtracking prefers equal, then replace, then delete, then insert;
/// adjacent ops of the same kind are coalesced.
pub fn align<B: AsRef<str>, O: AsRef<str>>(base: &[B], other: &[O]) -> EditScript {
    align_with(base, other, Normalization::FULL)
}

/// [`align`] under an explicit normalization policy.
pub fn align_with<B: AsRef<str>, O: AsRef<str>>(
    base: &[B],
    other: &[O],
    normalization: Normalization,
) -> EditScript {
    let mut interner = Interner::default();
    let words = base.iter().map(AsRef::as_ref).chain(other.iter().map(AsRef::as_ref));
    let ids = |buf: &mut [u64]| {
        for (slot, w) in buf.iter_mut().zip(words) {
            *slot = interner.symbol(normalization.apply_cow(w));
        }
    };
    with_scratch::<_, _, 64>(base.len() + other.len(), |buf| {
        ids(buf);
        let (a, b) = buf.split_at(base.len());
        align_ids(a, b)
    })
}

/// Runs `f` on a zeroed buffer of `len` values, on the stack when it is small.
fn with_scratch<T: Copy + Default, R, const STACK: usize>(len: usize, f: impl FnOnce(&mut [T]) -> R) -> R {
    if len <= STACK {
        let mut buf = [T::default(); STACK];
        f(&mut buf[..len])
    } else {
        f(&mut vec![T::default(); len])
    }
}

fn align_ids(a: &[u64], b: &[u64]) -> EditScript {
    // backtracking always matches a shared suffix first, so it can skip the table
    let suffix = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
    let (n, m) = (a.len() - suffix, b.len() - suffix);
    let (a, b) = (&a[..n], &b[..m]);
    let mut script = with_scratch::<_, _, 256>((n + 1) * (m + 1), |dist| {
        backtrack(a, b, fill_distances(a, b, dist))
    });
    if suffix > 0 {
        let tail = DiffOp::new(OpKind::Equal, n..n + suffix, m..m + suffix);
        push_coalesced(&mut script.ops, tail, &COALESCE_ALL);
    }
    script
}

/// Fills the Levenshtein table row by row.
fn fill_distances<'d>(a: &[u64], b: &[u64], dist: &'d mut [u32]) -> &'d [u32] {
    let width = b.len() + 1;
    for (j, d) in dist[..width].iter_mut().enumerate() {
        *d = j as u32;
    }
    for (i, &ai) in a.iter().enumerate() {
        let (done, rest) = dist.split_at_mut((i + 1) * width);
        let prev = &done[i * width..];
        let cur = &mut rest[..width];
        let mut left = i as u32 + 1;
        cur[0] = left;
        for ((pair, &bj), out) in prev.windows(2).zip(b).zip(&mut cur[1..]) {
            let diag = pair[0] + u32::from(ai != bj);
            left = diag.min(pair[1] + 1).min(left + 1);
            *out = left;
        }
    }
    dist
}

/// Walks the table from the end, coalescing as it goes, then flips.
fn backtrack(a: &[u64], b: &[u64], dist: &[u32]) -> EditScript {
    let (n, m) = (a.len(), b.len());
    let width = m + 1;
    let at = |i: usize, j: usize| dist[i * width + j];
    let mut ops: Vec<DiffOp> = Vec::with_capacity(n.max(m).min(16));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = at(i, j);
        let step = if i > 0 && j > 0 && here == at(i - 1, j - 1) && a[i - 1] == b[j - 1] {
            OpKind::Equal
        } else if i > 0 && j > 0 && here == at(i - 1, j - 1) + 1 {
            OpKind::Replace
        } else if i > 0 && here == at(i - 1, j) + 1 {
            OpKind::Delete
        } else {
            OpKind::Insert
        };
        let (pi, pj) = match step {
            OpKind::Equal | OpKind::Replace => (i - 1, j - 1),
            OpKind::Delete => (i - 1, j),
            _ => (i, j - 1),
        };
        match ops.last_mut() {
            Some(last) if last.kind == step => {
                last.base.start = pi;
                last.other.start = pj;
            }
            _ => ops.push(DiffOp::new(step, pi..i, pj..j)),
        }
        (i, j) = (pi, pj);
    }
    ops.reverse();
    EditScript { ops }
}

/// Longest-common-subsequence similarity `2·LCS / (|a| + |b|)` over chars.
pub fn char_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ca in &a {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    2.0 * prev[b.len()] as f64 / (a.len() + b.len()) as f64
}

/// Minimum similarity for two words to be paired when splitting a replacement.
pub const PAIRING_THRESHOLD: f64 = 0.5;

fn joined_normalized<S: AsRef<str>>(words: &[S], span: &Range<usize>) -> String {
    words[span.clone()]
        .iter()
        .map(|w| normalize_word(w.as_ref()))
        .collect()
}

fn op_similarity<B: AsRef<str>, O: AsRef<str>>(op: &DiffOp, base: &[B], other: &[O]) -> f64 {
    char_similarity(
        &joined_normalized(base, &op.base),
        &joined_normalized(other, &op.other),
    )
}

/// Splits uneven replacements, then merges insertions/deletions into
/// neighbouring replacements where that raises character similarity.
pub fn refine<B: AsRef<str>, O: AsRef<str>>(
    script: &EditScript,
    base: &[B],
    other: &[O],
) -> EditScript {
    let mut split = Vec::with_capacity(script.ops.len());
    for op in &script.ops {
        if op.kind == OpKind::Replace && op.base.len() != op.other.len() {
            for piece in split_replace(op, base, other) {
                push_coalesced(&mut split, piece, &[OpKind::Equal, OpKind::Delete, OpKind::Insert]);
            }
        } else {
            push_coalesced(&mut split, op.clone(), &[OpKind::Equal]);
        }
    }
    merge_into_replacements(split, base, other)
}

/// Monotone pairing across the two sides maximizing total similarity.
fn split_replace<B: AsRef<str>, O: AsRef<str>>(
    op: &DiffOp,
    base: &[B],
    other: &[O],
) -> Vec<DiffOp> {
    let bw: Vec<String> = base[op.base.clone()]
        .iter()
        .map(|w| normalize_word(w.as_ref()))
        .collect();
    let ow: Vec<String> = other[op.other.clone()]
        .iter()
        .map(|w| normalize_word(w.as_ref()))
        .collect();
    let (n, m) = (bw.len(), ow.len());
    let sim: Vec<Vec<f64>> = bw
        .iter()
        .map(|x| ow.iter().map(|y| char_similarity(x, y)).collect())
        .collect();
    let mut best = vec![vec![0.0f64; m + 1]; n + 1];
    for i in 1..=n {
        for j in 1..=m {
            let mut v = best[i - 1][j].max(best[i][j - 1]);
            let s = sim[i - 1][j - 1];
            if s >= PAIRING_THRESHOLD {
                v = v.max(best[i - 1][j - 1] + s);
            }
            best[i][j] = v;
        }
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        let s = sim[i - 1][j - 1];
        if s >= PAIRING_THRESHOLD && best[i][j] == best[i - 1][j - 1] + s {
            pairs.push((i - 1, j - 1));
            i -= 1;
            j -= 1;
        } else if best[i][j] == best[i - 1][j] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    if pairs.is_empty() {
        return vec![op.clone()];
    }
    pairs.reverse();

    let (b0, o0) = (op.base.start, op.other.start);
    let mut out: Vec<DiffOp> = Vec::new();
    let (mut bi, mut oi) = (0, 0);
    let push = |out: &mut Vec<DiffOp>, kind, b: Range<usize>, o: Range<usize>| {
        let piece = DiffOp::new(kind, b0 + b.start..b0 + b.end, o0 + o.start..o0 + o.end);
        // consecutive pairs form one replacement
        push_coalesced(out, piece, &COALESCE_ALL);
    };
    for (pb, po) in pairs {
        if bi < pb {
            push(&mut out, OpKind::Delete, bi..pb, oi..oi);
        }
        if oi < po {
            push(&mut out, OpKind::Insert, pb..pb, oi..po);
        }
        let kind = if bw[pb] == ow[po] {
            OpKind::Equal
        } else {
            OpKind::Replace
        };
        push(&mut out, kind, pb..pb + 1, po..po + 1);
        bi = pb + 1;
        oi = po + 1;
    }
    if bi < n {
        push(&mut out, OpKind::Delete, bi..n, oi..oi);
    }
    if oi < m {
        push(&mut out, OpKind::Insert, n..n, oi..m);
    }
    out
}

fn merge_into_replacements<B: AsRef<str>, O: AsRef<str>>(
    mut ops: Vec<DiffOp>,
    base: &[B],
    other: &[O],
) -> EditScript {
    let absorbable = |op: &DiffOp| matches!(op.kind, OpKind::Insert | OpKind::Delete);
    loop {
        let mut changed = false;
        let mut k = 0;
        while k < ops.len() {
            if ops[k].kind != OpKind::Replace {
                k += 1;
                continue;
            }
            let before = op_similarity(&ops[k], base, other);
            if k > 0 && absorbable(&ops[k - 1]) {
                let merged = DiffOp::new(
                    OpKind::Replace,
                    ops[k - 1].base.start..ops[k].base.end,
                    ops[k - 1].other.start..ops[k].other.end,
                );
                if op_similarity(&merged, base, other) > before {
                    ops.splice(k - 1..=k, [merged]);
                    changed = true;
                    continue;
                }
            }
            if k + 1 < ops.len() && absorbable(&ops[k + 1]) {
                let merged = DiffOp::new(
                    OpKind::Replace,
                    ops[k].base.start..ops[k + 1].base.end,
                    ops[k].other.start..ops[k + 1].other.end,
                );
                if op_similarity(&merged, base, other) > before {
                    ops.splice(k..=k + 1, [merged]);
                    changed = true;
                    continue;
                }
            }
            k += 1;
        }
        if !changed {
            return EditScript { ops };
        }
    }
}

/// A rule that decides a difference is not a real disagreement.
pub trait DiffHeuristic {
    fn drops(&self, op: &DiffOp, base: &[&str], other: &[&str]) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Script {
    Latin,
    Cyrillic,
}

fn char_script(c: char) -> Option<Script> {
    match c {
        'A'..='Z' | 'a'..='z' => Some(Script::Latin),
        '\u{00C0}'..='\u{024F}' if c.is_alphabetic() => Some(Script::Latin),
        '\u{0400}'..='\u{052F}' if c.is_alphabetic() => Some(Script::Cyrillic),
        _ => None,
    }
}

/// The single script every letter of `text` belongs to, or `None` when
/// the text is empty, mixed, or contains non-letters.
pub fn text_script(text: &str) -> Option<Script> {
    let mut found = None;
    for c in text.chars() {
        let s = char_script(c)?;
        match found {
            None => found = Some(s),
            Some(prev) if prev != s => return None,
            _ => {}
        }
    }
    found
}

/// Drops Latin ↔ Cyrillic replacements, which are usually transliterations.
#[derive(Debug, Clone, Copy, Default)]
pub struct TransliterationHeuristic;

impl DiffHeuristic for TransliterationHeuristic {
    fn drops(&self, op: &DiffOp, base: &[&str], other: &[&str]) -> bool {
        if op.kind != OpKind::Replace {
            return false;
        }
        let b = text_script(&joined_normalized(base, &op.base));
        let o = text_script(&joined_normalized(other, &op.other));
        matches!(
            (b, o),
            (Some(Script::Latin), Some(Script::Cyrillic))
                | (Some(Script::Cyrillic), Some(Script::Latin))
        )
    }
}

/// Rewrites every difference some heuristic drops as [`OpKind::Accepted`].
pub fn apply_heuristics<B: AsRef<str>, O: AsRef<str>>(
    script: &EditScript,
    base: &[B],
    other: &[O],
    heuristics: &[&dyn DiffHeuristic],
) -> EditScript {
    let b: Vec<&str> = base.iter().map(AsRef::as_ref).collect();
    let o: Vec<&str> = other.iter().map(AsRef::as_ref).collect();
    let ops = script
        .ops
        .iter()
        .map(|op| {
            if op.is_difference() && heuristics.iter().any(|h| h.drops(op, &b, &o)) {
                DiffOp::new(OpKind::Accepted, op.base.clone(), op.other.clone())
            } else {
                op.clone()
            }
        })
        .collect();
    EditScript { ops }
}

pub fn drop_script_mismatch_diffs<B: AsRef<str>, O: AsRef<str>>(
    script: &EditScript,
    base: &[B],
    other: &[O],
) -> EditScript {
    apply_heuristics(script, base, other, &[&TransliterationHeuristic])
}

/// Language-model plausibility of a word sequence; higher is better.
pub trait SequenceScorer: Send + Sync {
    fn score(&self, words: &[String]) -> Result<f64, BackendError>;

    fn concurrency(&self) -> Concurrency {
        Concurrency::Parallel
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookaheadParams {
    /// Differences at most this many base words apart are decided jointly.
    pub lookahead: usize,
    /// Largest jointly enumerated group; bigger groups are decided one by one.
    pub group_max: usize,
}

impl Default for LookaheadParams {
    fn default() -> Self {
        Self {
            lookahead: 3,
            group_max: 4,
        }
    }
}

/// Keeps a difference only when the language model scores the sentence with
/// the additional-model variant strictly higher than the base; ties go to
/// the base. Nearby differences are decided jointly over all `2^k`
/// substitutions.
pub fn lm_validate<B: AsRef<str>, O: AsRef<str>>(
    script: &EditScript,
    base: &[B],
    other: &[O],
    lm: &dyn SequenceScorer,
    params: LookaheadParams,
) -> Result<EditScript, BackendError> {
    let diffs: Vec<usize> = (0..script.ops.len())
        .filter(|&k| script.ops[k].is_difference())
        .collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &k in &diffs {
        match groups.last_mut() {
            Some(g)
                if script.ops[k].base.start - script.ops[*g.last().unwrap()].base.end
                    <= params.lookahead =>
            {
                g.push(k)
            }
            _ => groups.push(vec![k]),
        }
    }

    let sentence = |chosen: &[usize]| -> Vec<String> {
        let mut words = Vec::new();
        for (k, op) in script.ops.iter().enumerate() {
            if chosen.contains(&k) {
                words.extend(other[op.other.clone()].iter().map(|w| w.as_ref().to_string()));
            } else {
                words.extend(base[op.base.clone()].iter().map(|w| w.as_ref().to_string()));
            }
        }
        words
    };

    let base_score = lm.score(&sentence(&[]))?;
    let mut keep: Vec<usize> = Vec::new();
    for group in groups {
        if group.len() <= params.group_max {
            keep.extend(best_joint_assignment(&group, base_score, |chosen| {
                lm.score(&sentence(chosen))
            })?);
        } else {
            for &k in &group {
                if lm.score(&sentence(&[k]))? > base_score {
                    keep.push(k);
                }
            }
        }
    }

    let ops = script
        .ops
        .iter()
        .enumerate()
        .map(|(k, op)| {
            if op.is_difference() && !keep.contains(&k) {
                DiffOp::new(OpKind::Accepted, op.base.clone(), op.other.clone())
            } else {
                op.clone()
            }
        })
        .collect();
    Ok(EditScript { ops })
}

/// Argmax over subsets of `group`, visited by (size, bitmask) so that the
/// all-base assignment wins ties.
fn best_joint_assignment(
    group: &[usize],
    base_score: f64,
    mut score: impl FnMut(&[usize]) -> Result<f64, BackendError>,
) -> Result<Vec<usize>, BackendError> {
    let k = group.len();
    let mut masks: Vec<u32> = (1..(1u32 << k)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut best = (base_score, 0u32);
    for mask in masks {
        let chosen: Vec<usize> = (0..k)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| group[b])
            .collect();
        let s = score(&chosen)?;
        if s > best.0 {
            best = (s, mask);
        }
    }
    Ok((0..k)
        .filter(|b| best.1 & (1 << b) != 0)
        .map(|b| group[b])
        .collect())
}

/// Log-frequency unigram scorer with add-one smoothing.
#[derive(Debug, Clone, Default)]
pub struct UnigramScorer {
    counts: std::collections::HashMap<String, u64>,
    total: u64,
}

impl UnigramScorer {
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut map = std::collections::HashMap::new();
        for (w, c) in counts {
            *map.entry(normalize_word(w.as_ref())).or_insert(0) += c;
        }
        let total = map.values().sum();
        Self { counts: map, total }
    }

    /// Parses `word<TAB>count` lines; blank lines and `#` comments are skipped.
    pub fn from_tsv(text: &str) -> Result<Self, String> {
        let mut counts = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (w, c) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: expected word<TAB>count", n + 1))?;
            let c: u64 = c
                .trim()
                .parse()
                .map_err(|e| format!("line {}: {e}", n + 1))?;
            counts.push((w.to_string(), c));
        }
        Ok(Self::from_counts(counts))
    }

    /// Table of common English and Russian words shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_tsv(include_str!("../data/unigram_counts.tsv"))
            .expect("bundled unigram table is well-formed")
    }

    pub fn log_prob(&self, word: &str) -> f64 {
        let vocab = self.counts.len() as f64 + 1.0;
        let c = self.counts.get(&normalize_word(word)).copied().unwrap_or(0) as f64;
        ((c + 1.0) / (self.total as f64 + vocab)).ln()
    }
}

impl SequenceScorer for UnigramScorer {
    fn score(&self, words: &[String]) -> Result<f64, BackendError> {
        Ok(words.iter().map(|w| self.log_prob(w)).sum())
    }
}

/// Scores every sequence the same.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantScorer(pub f64);

impl SequenceScorer for ConstantScorer {
    fn score(&self, _words: &[String]) -> Result<f64, BackendError> {
        Ok(self.0)
    }
}
