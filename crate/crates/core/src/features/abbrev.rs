//! Abbreviation definitions with the Schwartz–Hearst matching rule.
//!
//! For every parenthesized short form, the preceding words of the same
//! sentence are searched right to left: each short-form character must occur
//! in order in the long form, and the first short-form character must begin
//! a word.

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Pmid};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbbrevDefinition {
    pub short_form: String,
    pub long_form: String,
    pub pmid: Pmid,
}

const MAX_SHORT_FORM_CHARS: usize = 10;

fn lower(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

fn is_valid_short_form(sf: &[char]) -> bool {
    (2..=MAX_SHORT_FORM_CHARS).contains(&sf.len())
        && sf[0].is_alphanumeric()
        && sf.iter().any(|c| c.is_alphabetic())
        && sf.iter().filter(|c| c.is_whitespace()).count() <= 1
}

/// Index into `lf` where the long form starts, or `None` if the short form
/// cannot be matched.
fn best_long_form_start(sf: &[char], lf: &[char]) -> Option<usize> {
    let mut s = sf.len() as isize - 1;
    let mut l = lf.len() as isize - 1;
    while s >= 0 {
        let c = lower(sf[s as usize]);
        if !c.is_alphanumeric() {
            s -= 1;
            continue;
        }
        while l >= 0 && (lower(lf[l as usize]) != c || (s == 0 && l > 0 && lf[l as usize - 1].is_alphanumeric())) {
            l -= 1;
        }
        if l < 0 {
            return None;
        }
        l -= 1;
        s -= 1;
    }
    // Extend to the start of the word containing the match.
    let mut start = (l + 1) as usize;
    while start > 0 && !lf[start - 1].is_whitespace() {
        start -= 1;
    }
    Some(start)
}

/// The text preceding `open` within its sentence, limited to the last
/// `max_words` words.
fn long_form_window(text: &[char], open: usize, max_words: usize) -> &[char] {
    let mut begin = open;
    while begin > 0 {
        let c = text[begin - 1];
        if c == '('
            || c == ')'
            || c == ';'
            || ((c == '.' || c == '!' || c == '?') && text.get(begin).is_some_and(|n| n.is_whitespace()))
        {
            break;
        }
        begin -= 1;
    }
    let mut end = open;
    while end > begin && text[end - 1].is_whitespace() {
        end -= 1;
    }
    let window = &text[begin..end];
    // Keep only the trailing `max_words` words.
    let mut words = 0;
    let mut i = window.len();
    while i > 0 {
        while i > 0 && window[i - 1].is_whitespace() {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        words += 1;
        while i > 0 && !window[i - 1].is_whitespace() {
            i -= 1;
        }
        if words == max_words {
            break;
        }
    }
    &window[i..]
}

pub fn detect_abbreviations(doc: &Document) -> Vec<AbbrevDefinition> {
    let text: Vec<char> = doc.full_text().chars().collect();
    let mut out = Vec::new();
    for open in (0..text.len()).filter(|&i| text[i] == '(') {
        let mut depth = 0usize;
        let Some(close) = (open..text.len()).find(|&i| {
            match text[i] {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            depth == 0
        }) else {
            continue;
        };
        let inner = &text[open + 1..close];
        let cut = inner.iter().position(|c| *c == ';' || *c == ',').unwrap_or(inner.len());
        let inner = &inner[..cut];
        let first = inner.iter().position(|c| !c.is_whitespace()).unwrap_or(inner.len());
        let last = inner.iter().rposition(|c| !c.is_whitespace()).map_or(first, |i| i + 1);
        let sf = &inner[first..last.max(first)];
        if !is_valid_short_form(sf) {
            continue;
        }
        let max_words = (sf.len() + 5).min(2 * sf.len());
        let window = long_form_window(&text, open, max_words);
        let Some(start) = best_long_form_start(sf, window) else {
            continue;
        };
        let lf = &window[start..];
        if lf.len() <= sf.len() || lf.iter().any(|c| *c == '(' || *c == ')') {
            continue;
        }
        out.push(AbbrevDefinition {
            short_form: sf.iter().collect(),
            long_form: lf.iter().collect(),
            pmid: doc.pmid(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn detect(text: &str) -> Vec<(String, String)> {
        detect_abbreviations(&Document::new(Pmid::new(1).unwrap(), text, ""))
            .into_iter()
            .map(|a| (a.short_form, a.long_form))
            .collect()
    }

    #[test]
    fn eif4e() {
        assert_eq!(
            detect("Eukaryotic translation initiation factor 4E (eIF4E) binds to the mRNA 5' cap."),
            vec![("eIF4E".into(), "Eukaryotic translation initiation factor 4E".into())]
        );
    }

    #[test]
    fn alkaptonuria() {
        assert_eq!(detect("Alkaptonuria (AKU) is a rare disorder."), vec![("AKU".into(), "Alkaptonuria".into())]);
    }

    #[test]
    fn no_parentheses() {
        assert!(detect("Nothing to see here.").is_empty());
    }

    #[test]
    fn rejects_non_matching_and_invalid_short_forms() {
        assert!(detect("some random words (XYZ) here").is_empty());
        assert!(detect("a figure reference (1999) here").is_empty());
        assert!(detect("unbalanced (ABC").is_empty());
        assert!(detect("tumor necrosis factor (toolongshortform)").is_empty());
    }

    #[test]
    fn stays_inside_the_sentence() {
        assert_eq!(
            detect("Tumors were studied. Tumor necrosis factor (TNF) was measured."),
            vec![("TNF".into(), "Tumor necrosis factor".into())]
        );
    }

    #[test]
    fn short_form_before_comma() {
        assert_eq!(detect("cystic fibrosis (CF, see above)"), vec![("CF".into(), "cystic fibrosis".into())]);
    }

    #[test]
    fn first_letter_must_start_a_word() {
        // 'h' of "heat" starts a word; the 'h' inside "shock" does not count.
        assert_eq!(
            detect("in response to heat shock protein (HSP) induction"),
            vec![("HSP".into(), "heat shock protein".into())]
        );
    }
}
