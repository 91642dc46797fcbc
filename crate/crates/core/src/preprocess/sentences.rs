//! Rule-based sentence segmentation.
//!
//! A boundary is a run of `.`, `!` or `?` (plus closing quotes or brackets)
//! followed by whitespace and then an uppercase letter or a digit. A single
//! period ending a known abbreviation is not a boundary, and neither is a
//! German ordinal in a date ("am 5. März").

use crate::types::Language;

const ABBREV_COMMON: &[&str] = &["Art.", "art.", "Dr.", "Prof.", "Nr.", "No.", "no.", "vol.", "Vol.", "ff.", "f."];

/// Abbreviations that only bind to a following number ("fr. 2'000").
const ABBREV_NUMERIC: &[&str] = &["fr.", "Fr."];

const ABBREV_DE: &[&str] = &[
    "Abs.", "Ziff.", "lit.", "Bst.", "S.", "E.", "N.", "Rz.", "Kap.", "ca.", "bzw.", "vgl.", "z.B.", "u.a.", "d.h.",
    "i.V.m.", "usw.", "Fr.", "Hr.", "gem.", "sog.", "inkl.", "evtl.", "resp.", "Mio.", "Mia.", "St.", "act.", "Bd.",
    "Anm.", "lic.", "iur.", "al.", "zit.", "m.E.", "Ges.", "Vorinst.",
];

const ABBREV_FR: &[&str] = &[
    "al.", "let.", "ch.", "p.ex.", "cf.", "M.", "MM.", "Mme.", "Mlle.", "p.", "pp.", "ss.", "consid.", "n.", "c.-à-d.",
    "éd.", "spéc.", "resp.", "env.", "op.", "cit.", "s.", "cons.", "réf.",
];

const ABBREV_IT: &[&str] = &[
    "cpv.", "lett.", "n.", "p.es.", "cfr.", "sig.", "sig.ra", "dott.", "avv.", "consid.", "pag.",
    "seg.", "segg.", "cons.", "p.", "cifra", "cif.", "lett.", "ss.",
];

const ABBREV_EN: &[&str] = &["e.g.", "i.e.", "Mr.", "Mrs.", "Ms.", "para.", "p.", "pp.", "cf.", "vs.", "v.", "Inc.", "Ltd.", "Co."];

const MONTHS_DE: &[&str] = &[
    "Januar", "Jänner", "Februar", "März", "April", "Mai", "Juni", "Juli", "August", "September", "Oktober", "November",
    "Dezember",
];

pub fn abbreviations(language: Language) -> impl Iterator<Item = &'static str> {
    let specific = match language {
        Language::De => ABBREV_DE,
        Language::Fr => ABBREV_FR,
        Language::It => ABBREV_IT,
        Language::En => ABBREV_EN,
    };
    ABBREV_COMMON.iter().chain(specific).copied()
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '»' | '«' | '”' | '’' | ')' | ']')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '«' | '»' | '“' | '„' | '(' | '[')
}

/// Splits `text` into trimmed sentences. Empty input yields no sentences.
pub fn split_sentences(text: &str, language: Language) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let byte_at = |i: usize| if i < n { chars[i].0 } else { text.len() };

    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < n {
        if !is_terminator(chars[i].1) {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut j = i;
        while j + 1 < n && is_terminator(chars[j + 1].1) {
            j += 1;
        }
        let run_end = j;
        loop {
            if j + 1 < n && is_closer(chars[j + 1].1) {
                j += 1;
            } else if j + 2 < n && chars[j + 1].1.is_whitespace() && chars[j + 2].1 == '»' {
                j += 2;
            } else {
                break;
            }
        }
        let mut k = j + 1;
        if k >= n || !chars[k].1.is_whitespace() {
            i = j + 1;
            continue;
        }
        while k < n && chars[k].1.is_whitespace() {
            k += 1;
        }
        let mut m = k;
        while m < n && (is_opener(chars[m].1) || (m > k && is_opener(chars[m - 1].1) && chars[m].1.is_whitespace())) {
            m += 1;
        }
        let starts_sentence = m < n && (chars[m].1.is_uppercase() || chars[m].1.is_ascii_digit());
        if starts_sentence && !suppressed(text, &chars, run_start, run_end, m, language) {
            let s = text[start..byte_at(j + 1)].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = byte_at(k);
        }
        i = j + 1;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

fn suppressed(text: &str, chars: &[(usize, char)], run_start: usize, run_end: usize, next: usize, language: Language) -> bool {
    if run_start != run_end || chars[run_start].1 != '.' {
        return false;
    }
    let dot_end = chars[run_start].0 + 1;
    let token_start = text[..chars[run_start].0]
        .rfind(char::is_whitespace)
        .map(|p| p + text[p..].chars().next().unwrap().len_utf8())
        .unwrap_or(0);
    let token = text[token_start..dot_end].trim_start_matches(is_opener);
    // "l'art." / "dell'art." carry an elided article
    let token = token.rfind(['\'', '’']).map_or(token, |p| &token[p + token[p..].chars().next().unwrap().len_utf8()..]);
    let mut decap = String::with_capacity(token.len());
    let mut cs = token.chars();
    decap.extend(cs.next().into_iter().flat_map(char::to_lowercase));
    decap.push_str(cs.as_str());
    if abbreviations(language).any(|a| a == token || a == decap) {
        return true;
    }
    if ABBREV_NUMERIC.contains(&token) && chars[next].1.is_ascii_digit() {
        return true;
    }
    if language == Language::De {
        let digits = &token[..token.len() - 1];
        if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
            let rest = &text[chars[next].0..];
            let word = rest.split(|c: char| !c.is_alphabetic()).next().unwrap_or("");
            return MONTHS_DE.contains(&word);
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_terminators() {
        assert_eq!(split_sentences("A. B? C!", Language::En), vec!["A.", "B?", "C!"]);
    }

    #[test]
    fn empty_text() {
        assert!(split_sentences("", Language::De).is_empty());
        assert!(split_sentences("   \n", Language::De).is_empty());
    }

    #[test]
    fn german_article_abbreviation() {
        assert_eq!(
            split_sentences("Gemäss Art. 5 gilt X. Das Gericht entscheidet.", Language::De),
            vec!["Gemäss Art. 5 gilt X.", "Das Gericht entscheidet."]
        );
    }

    #[test]
    fn french_abbreviations() {
        let text = "Selon l'art. 8 al. 2 Cst., p.ex. Durand, le recours est admis. M. Dupont conteste.";
        assert_eq!(
            split_sentences(text, Language::Fr),
            vec!["Selon l'art. 8 al. 2 Cst., p.ex. Durand, le recours est admis.", "M. Dupont conteste."]
        );
    }

    #[test]
    fn german_dates_do_not_split() {
        let text = "Mit Urteil vom 12. März 2019 wies das Obergericht die Klage ab. Der Kläger erhob Beschwerde.";
        assert_eq!(split_sentences(text, Language::De).len(), 2);
        assert_eq!(split_sentences("Im Jahr 2010. Danach nicht mehr.", Language::De).len(), 2);
    }

    #[test]
    fn lowercase_continuation_and_decimals() {
        assert_eq!(split_sentences("Der Wert ist 3.5 Mio. und mehr. ende", Language::De).len(), 1);
        assert_eq!(split_sentences("Wirklich?! \"Ja.\" Gut.", Language::De), vec!["Wirklich?!", "\"Ja.\"", "Gut."]);
    }

    #[test]
    fn reconstructs_modulo_whitespace() {
        let text = "  Erster Satz.   Zweiter Satz!\nDritter Satz? 4 Punkte. ";
        let joined = split_sentences(text, Language::De).join(" ");
        let norm: Vec<&str> = text.split_whitespace().collect();
        assert_eq!(joined, norm.join(" "));
    }
}
