//! Slot values observed in a corpus, used for distractors and fabricated
//! arguments.

use std::collections::{BTreeMap, BTreeSet};

use crate::dialogue::{Dialogue, ToolArgSpec};
use crate::metrics::{fuzzy_score, normalize};

const CITIES: [&str; 10] =
    ["Portland", "Sacramento", "Denver", "Chicago", "Phoenix", "Toronto", "Boston", "Atlanta", "Fresno", "Anaheim"];
const DATES: [&str; 6] = ["2019-03-02", "2019-03-07", "2019-03-14", "2019-03-21", "2019-03-27", "2019-04-03"];
const TIMES: [&str; 6] = ["07:15", "09:45", "11:30", "14:20", "17:50", "20:10"];
const COUNTS: [&str; 5] = ["1", "2", "3", "4", "5"];
const NAMES: [&str; 6] = ["Blue Harbor", "Golden Gate Grill", "Maple Court", "Riverside Hall", "Sunset Plaza", "Oak Terrace"];

/// Values seen per argument/field name across a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValueBank {
    slots: BTreeMap<String, BTreeSet<String>>,
}

impl ValueBank {
    pub fn from_corpus<'a, I: IntoIterator<Item = &'a Dialogue>>(corpus: I) -> Self {
        let mut bank = ValueBank::default();
        for d in corpus {
            for turn in &d.turns {
                let Some(t) = turn.assistant.tool_turn() else { continue };
                for (k, v) in &t.call.args {
                    bank.add(k, v);
                }
                for row in t.result.rows() {
                    for (k, v) in row {
                        bank.add(k, v);
                    }
                }
            }
        }
        bank
    }

    pub fn add(&mut self, slot: &str, value: &str) {
        if !value.trim().is_empty() {
            self.slots.entry(slot.to_string()).or_default().insert(value.to_string());
        }
    }

    pub fn values(&self, slot: &str) -> impl Iterator<Item = &str> {
        self.slots.get(slot).into_iter().flatten().map(String::as_str)
    }

    /// Candidate values for `spec` that are clearly different from `current`
    /// (fuzzy similarity below `threshold`). Corpus values come first, then
    /// values of `siblings` (other arguments of the same call), then built-in
    /// fallbacks for the slot's kind. Sorted and deduplicated.
    pub fn distractors(&self, spec: &ToolArgSpec, current: &str, siblings: &[&str], threshold: f64) -> Vec<String> {
        let mut out = BTreeSet::new();
        if spec.is_categorical {
            for v in &spec.possible_values {
                if normalize(v) != normalize(current) {
                    out.insert(v.clone());
                }
            }
            return out.into_iter().collect();
        }
        let kind = SlotKind::of(&spec.name);
        let pool = self
            .values(&spec.name)
            .map(str::to_string)
            .chain(siblings.iter().filter(|s| SlotKind::of_value(s) == kind.value_shape()).map(|s| s.to_string()))
            .chain(kind.fallback().iter().map(|s| s.to_string()));
        for v in pool {
            if fuzzy_score(&v, current) < threshold {
                out.insert(v);
            }
        }
        out.into_iter().collect()
    }

    /// Plausible values for a slot nobody filled yet.
    pub fn plausible(&self, spec: &ToolArgSpec) -> Vec<String> {
        if spec.is_categorical {
            return spec.possible_values.clone();
        }
        let seen: Vec<String> = self.values(&spec.name).map(str::to_string).collect();
        if !seen.is_empty() {
            return seen;
        }
        SlotKind::of(&spec.name).fallback().iter().map(|s| s.to_string()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SlotKind {
    Place,
    Date,
    Time,
    Count,
    Name,
}

impl SlotKind {
    pub(crate) fn of(name: &str) -> SlotKind {
        let n = name.to_ascii_lowercase();
        if n.contains("date") {
            SlotKind::Date
        } else if n.contains("time") {
            SlotKind::Time
        } else if ["location", "city", "from", "to_", "where", "destination", "origin", "area"].iter().any(|k| n.contains(k)) {
            SlotKind::Place
        } else if ["number", "travelers", "count", "party", "seats", "tickets", "size", "guests", "rooms", "adults"]
            .iter()
            .any(|k| n.contains(k))
        {
            SlotKind::Count
        } else {
            SlotKind::Name
        }
    }

    /// Shape detected from a value, for picking same-kind sibling values.
    pub(crate) fn of_value(v: &str) -> SlotKind {
        let b = v.as_bytes();
        if b.len() == 10 && b[4] == b'-' && b[7] == b'-' && v.chars().filter(char::is_ascii_digit).count() == 8 {
            SlotKind::Date
        } else if b.len() == 5 && b[2] == b':' && v.chars().filter(char::is_ascii_digit).count() == 4 {
            SlotKind::Time
        } else if !v.is_empty() && v.chars().all(|c| c.is_ascii_digit()) {
            SlotKind::Count
        } else {
            SlotKind::Name
        }
    }

    fn value_shape(self) -> SlotKind {
        match self {
            SlotKind::Place => SlotKind::Name,
            k => k,
        }
    }

    fn fallback(self) -> &'static [&'static str] {
        match self {
            SlotKind::Place => &CITIES,
            SlotKind::Date => &DATES,
            SlotKind::Time => &TIMES,
            SlotKind::Count => &COUNTS,
            SlotKind::Name => &NAMES,
        }
    }
}

/// Integers written in a text (runs of ASCII digits), without leading zeros.
pub fn numbers_in(text: &str) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    let mut cur = String::new();
    for c in text.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_digit() {
            cur.push(c);
        } else if !cur.is_empty() {
            if let Ok(n) = cur.parse::<u64>() {
                out.insert(n);
            }
            cur.clear();
        }
    }
    out
}

/// Lower-case noun phrase for a tool: its name without the leading verb,
/// e.g. `BuyBusTicket` → `bus ticket`.
pub fn tool_noun(tool: &str) -> String {
    let mut words: Vec<String> = Vec::new();
    for c in tool.chars() {
        if c.is_uppercase() || words.is_empty() {
            words.push(String::new());
        }
        words.last_mut().expect("pushed").extend(c.to_lowercase());
    }
    let words: Vec<String> = words.into_iter().filter(|w| !w.is_empty() && w != "_").collect();
    if words.len() <= 1 {
        return "request".to_string();
    }
    let mut noun = words[1..].join(" ");
    // Plural tool names ("FindRestaurants") name a single item; "bus" stays.
    if !["ss", "us", "is"].iter().any(|end| noun.ends_with(end)) {
        if let Some(s) = noun.strip_suffix('s') {
            noun = s.to_string();
        }
    }
    noun
}

/// Whether `value` appears in `text` at word boundaries after normalization.
pub fn mentioned(value: &str, text: &str) -> bool {
    let v = normalize(value);
    if v.is_empty() {
        return true;
    }
    let hay = normalize(text);
    let mut start = 0;
    while let Some(off) = hay[start..].find(&v) {
        let pos = start + off;
        let before = hay[..pos].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        let after = hay[pos + v.len()..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if before && after {
            return true;
        }
        start = pos + v.len();
    }
    false
}
