//! Normalized edit-distance similarity for free-form argument values.

/// Case-folds, collapses whitespace and strips leading/trailing punctuation.
pub fn normalize(s: &str) -> String {
    let folded = s.to_lowercase();
    let collapsed = folded.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.trim_matches(|c: char| is_punct(c) || c.is_whitespace()).to_string()
}

pub(crate) fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2013}' | '\u{2014}' | '\u{2026}' | '\u{00AB}' | '\u{00BB}')
}

/// Levenshtein distance over chars (unit insert/delete/substitute costs).
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - lev(norm(a), norm(b)) / max(|norm(a)|, |norm(b)|)`, lengths in chars.
/// Two strings that normalize to empty score 1.
pub fn fuzzy_score(a: &str, b: &str) -> f64 {
    let a: Vec<char> = normalize(a).chars().collect();
    let b: Vec<char> = normalize(b).chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&a, &b) as f64 / longest as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize("  Pacific   Central Station. "), "pacific central station");
        assert_eq!(normalize("'Vancouver'"), "vancouver");
        assert_eq!(normalize("!!!"), "");
    }

    #[test]
    fn identity_and_case() {
        assert_eq!(fuzzy_score("Pacific Central Station", "pacific central station"), 1.0);
        assert_eq!(fuzzy_score("", ""), 1.0);
        assert_eq!(fuzzy_score("abc", ""), 0.0);
    }

    #[test]
    fn vancouver_seattle() {
        // vancouver -> seattle: 9 chars vs 7, distance 8 (hand-checked DP table)
        assert_eq!(levenshtein(&"vancouver".chars().collect::<Vec<_>>(), &"seattle".chars().collect::<Vec<_>>()), 8);
        assert_eq!(fuzzy_score("Vancouver", "Seattle"), 1.0 - 8.0 / 9.0);
    }
}
