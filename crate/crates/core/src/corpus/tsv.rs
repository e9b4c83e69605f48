//! Parallel TSV: `id<TAB>sentence<TAB>surface<TAB>translation`. The span is
//! located by the first occurrence of the surface in the sentence.

use super::text::{collapse_whitespace, find_chars};
use super::{
    Converted, Corpus, CorpusError, LoadOptions, MweInstance, Parsed, RecordError,
    RecordErrorKind, Span,
};

/// Case-sensitive first match, then a case-insensitive fallback that the
/// caller should warn about.
pub(crate) fn locate_surface(sentence: &str, surface: &str) -> Option<(Span, bool)> {
    let hay: Vec<char> = sentence.chars().collect();
    let needle: Vec<char> = surface.chars().collect();
    if let Some(i) = find_chars(&hay, &needle, false) {
        return Some((Span(i, i + needle.len()), false));
    }
    find_chars(&hay, &needle, true).map(|i| (Span(i, i + needle.len()), true))
}

pub(super) fn parse(content: &str, opts: &LoadOptions) -> Result<Parsed, CorpusError> {
    let language = opts.default_language.clone().ok_or_else(|| {
        CorpusError::MissingOption("parallel TSV records carry no language; set one".into())
    })?;
    let mut parsed = Parsed {
        records: Vec::new(),
        errors: Vec::new(),
        warnings: Vec::new(),
        n_records: 0,
    };
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || (i == 0 && line.starts_with("id\t")) {
            continue;
        }
        parsed.n_records += 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 {
            parsed.errors.push(RecordError::new(
                line_no,
                cols.first().map(|s| s.to_string()),
                RecordErrorKind::Malformed(format!("expected at least 3 columns, got {}", cols.len())),
            ));
            continue;
        }
        let (id, sentence, surface) = (cols[0], cols[1], cols[2].trim());
        let Some((span, folded)) = locate_surface(sentence, surface) else {
            parsed.errors.push(RecordError::new(
                line_no,
                Some(id.to_string()),
                RecordErrorKind::SurfaceNotFound(surface.to_string()),
            ));
            continue;
        };
        if folded {
            parsed
                .warnings
                .push(format!("{id}: surface `{surface}` matched case-insensitively"));
        }
        let translation = cols.get(3).map(|t| t.to_string()).filter(|t| !t.is_empty());
        // The span text is authoritative when the match was case-folded.
        let surface = if folded {
            sentence
                .chars()
                .skip(span.start())
                .take(span.len())
                .collect()
        } else {
            surface.to_string()
        };
        parsed.records.push((
            line_no,
            MweInstance {
                id: id.to_string(),
                language: language.clone(),
                text: sentence.to_string(),
                mwe_type: opts.default_mwe_type,
                spans: vec![span],
                surface,
                source: String::new(),
                translation,
            },
        ));
    }
    Ok(parsed)
}

fn clean(field: &str, id: &str, what: &str, warnings: &mut Vec<String>) -> String {
    if field.contains(['\t', '\n', '\r']) {
        warnings.push(format!("{id}: {what} contains tab or line break; replaced by spaces"));
        field.replace(['\t', '\n', '\r'], " ")
    } else {
        field.to_string()
    }
}

pub(super) fn write(corpus: &Corpus) -> Converted {
    let mut out = String::new();
    let mut warnings = Vec::new();
    for inst in &corpus.instances {
        let surface = collapse_whitespace(&inst.span_texts().join(" "));
        if !inst.is_contiguous() {
            warnings.push(format!(
                "{}: discontiguous MWE flattened to surface `{surface}`",
                inst.id
            ));
        } else if let Some((span, _)) = locate_surface(&inst.text, &inst.span_texts()[0]) {
            if span != inst.spans[0] {
                warnings.push(format!(
                    "{}: surface first occurs before the annotated span; reload will pick char {}",
                    inst.id,
                    span.start()
                ));
            }
        }
        let surface = if inst.is_contiguous() {
            inst.span_texts().remove(0)
        } else {
            surface
        };
        let fields = [
            clean(&inst.id, &inst.id, "id", &mut warnings),
            clean(&inst.text, &inst.id, "sentence", &mut warnings),
            clean(&surface, &inst.id, "surface", &mut warnings),
            clean(
                inst.translation.as_deref().unwrap_or(""),
                &inst.id,
                "translation",
                &mut warnings,
            ),
        ];
        out.push_str(&fields.join("\t"));
        out.push('\n');
    }
    Converted {
        bytes: out.into_bytes(),
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus, CorpusFormat, MweType};

    fn opts(lang: &str) -> LoadOptions {
        LoadOptions {
            default_language: Some(lang.into()),
            ..Default::default()
        }
    }

    #[test]
    fn msu_rows_locate_surface() {
        let content = "id\tsentence\tsurface\ttranslation\n\
uk-msu-1\tЯ все ще сподівався на банальну аварію.\tвсе ще\tI was still hoping it was just a mundane accident.\n\
ru-msu-1\tЯ всё время думал о тебе, день и ночь.\tвсё время\tI thought about you all the time, day and night.\n";
        let out = parse_corpus(content, CorpusFormat::ParallelTsv, &opts("uk")).unwrap();
        assert_eq!(out.corpus.len(), 2);
        for inst in &out.corpus.instances {
            assert_eq!(inst.mwe_type, MweType::Msu);
            assert_eq!(inst.span_texts()[0], inst.surface);
        }
        assert_eq!(out.corpus.instances[0].spans, vec![Span(2, 8)]);
    }

    #[test]
    fn case_insensitive_fallback_warns() {
        let content = "pl-1\tZ trudem kojarzył i pojmował, co do niego mówią.\tz trudem\tHe barely understood.\n";
        let out = parse_corpus(content, CorpusFormat::ParallelTsv, &opts("pl")).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.corpus.instances[0].surface, "Z trudem");
    }

    #[test]
    fn missing_surface_is_record_error() {
        let content = "a\tone two\tone\t\nb\tthree four\tfive\t\n";
        let out = parse_corpus(content, CorpusFormat::ParallelTsv, &opts("en")).unwrap();
        assert_eq!(out.corpus.len(), 1);
        assert!(matches!(out.errors[0].kind, RecordErrorKind::SurfaceNotFound(_)));
    }

    #[test]
    fn language_is_required() {
        assert!(matches!(
            parse_corpus("a\tb\tb\n", CorpusFormat::ParallelTsv, &LoadOptions::default()),
            Err(CorpusError::MissingOption(_))
        ));
    }
}
