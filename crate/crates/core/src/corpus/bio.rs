//! BIO tagging: one `token<TAB>tag` line per token, blank line between
//! sentences, `# key = value` header comments carrying id, language, type and
//! the untokenized text.

use std::collections::BTreeMap;

use super::text::{char_slice, collapse_whitespace, word_pieces};
use super::{
    Converted, Corpus, CorpusError, LoadOptions, MweInstance, MweType, Parsed, RecordError,
    RecordErrorKind, Span,
};

const B_TAG: &str = "B-MWE";
const I_TAG: &str = "I-MWE";

fn trim_span(chars: &[char], span: Span) -> Option<Span> {
    let mut s = span.start();
    let mut e = span.end();
    while s < e && chars[s].is_whitespace() {
        s += 1;
    }
    while e > s && chars[e - 1].is_whitespace() {
        e -= 1;
    }
    (s < e).then_some(Span(s, e))
}

fn header_value(v: &str) -> String {
    v.replace(['\n', '\r'], " ")
}

pub(super) fn write(corpus: &Corpus) -> Converted {
    let mut out = String::new();
    let mut warnings = Vec::new();
    for inst in &corpus.instances {
        if inst.text.contains(['\n', '\r']) {
            warnings.push(format!("{}: text contains a line break; skipped", inst.id));
            continue;
        }
        let chars: Vec<char> = inst.text.chars().collect();
        let mut spans = Vec::new();
        for &span in &inst.spans {
            match trim_span(&chars, span) {
                Some(t) => {
                    if t != span {
                        warnings.push(format!(
                            "{}: span [{}, {}] trimmed to [{}, {}] at token boundaries",
                            inst.id,
                            span.start(),
                            span.end(),
                            t.start(),
                            t.end()
                        ));
                    }
                    spans.push(t);
                }
                None => warnings.push(format!("{}: whitespace-only span dropped", inst.id)),
            }
        }
        if spans.len() > 1 {
            warnings.push(format!(
                "{}: discontiguous MWE written as {} BIO groups",
                inst.id,
                spans.len()
            ));
        }
        let cuts: Vec<usize> = spans.iter().flat_map(|s| [s.start(), s.end()]).collect();

        out.push_str(&format!("# id = {}\n", header_value(&inst.id)));
        out.push_str(&format!("# language = {}\n", header_value(&inst.language)));
        out.push_str(&format!("# mwe_type = {}\n", inst.mwe_type));
        out.push_str(&format!("# text = {}\n", inst.text));
        out.push_str(&format!("# surface = {}\n", header_value(&inst.surface)));
        if !inst.source.is_empty() {
            out.push_str(&format!("# source = {}\n", header_value(&inst.source)));
        }
        if let Some(t) = &inst.translation {
            out.push_str(&format!("# translation = {}\n", header_value(t)));
        }
        for piece in word_pieces(&inst.text, &cuts) {
            let tag = match spans
                .iter()
                .find(|s| piece.start >= s.start() && piece.end <= s.end())
            {
                Some(s) if s.start() == piece.start => B_TAG,
                Some(_) => I_TAG,
                None => "O",
            };
            out.push_str(&piece.text);
            out.push('\t');
            out.push_str(tag);
            out.push('\n');
        }
        out.push('\n');
    }
    Converted {
        bytes: out.into_bytes(),
        warnings,
    }
}

struct Block<'a> {
    line: usize,
    headers: BTreeMap<String, String>,
    rows: Vec<(&'a str, &'a str)>,
}

fn blocks(content: &str) -> Result<Vec<Block<'_>>, RecordError> {
    let mut out = Vec::new();
    let mut cur: Option<Block> = None;
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            if let Some(b) = cur.take() {
                out.push(b);
            }
            continue;
        }
        let block = cur.get_or_insert_with(|| Block {
            line: line_no,
            headers: BTreeMap::new(),
            rows: Vec::new(),
        });
        if let Some((tok, tag)) = line.split_once('\t') {
            block.rows.push((tok, tag.trim()));
        } else if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                let v = v.strip_prefix(' ').unwrap_or(v);
                block.headers.insert(k.trim().to_string(), v.to_string());
            }
        } else {
            return Err(RecordError::new(
                line_no,
                None,
                RecordErrorKind::Malformed(format!("expected `token<TAB>tag`, got `{line}`")),
            ));
        }
    }
    if let Some(b) = cur.take() {
        out.push(b);
    }
    Ok(out)
}

fn tag_kind(tag: &str) -> Result<(char, Option<MweType>), String> {
    if tag == "O" {
        return Ok(('O', None));
    }
    let (prefix, label) = tag
        .split_once('-')
        .ok_or_else(|| format!("unknown tag `{tag}`"))?;
    let ty = match label.to_ascii_uppercase().as_str() {
        "MWE" => None,
        "IDIOM" => Some(MweType::Idiom),
        "MSU" => Some(MweType::Msu),
        _ => return Err(format!("unknown tag `{tag}`")),
    };
    match prefix {
        "B" => Ok(('B', ty)),
        "I" => Ok(('I', ty)),
        _ => Err(format!("unknown tag `{tag}`")),
    }
}

fn parse_block(
    block: &Block<'_>,
    index: usize,
    opts: &LoadOptions,
    warnings: &mut Vec<String>,
) -> Result<MweInstance, RecordError> {
    let id = block
        .headers
        .get("id")
        .cloned()
        .unwrap_or_else(|| format!("{}-{}", opts.name, index + 1));
    let err = |kind| RecordError::new(block.line, Some(id.clone()), kind);
    let malformed = |msg: String| err(RecordErrorKind::Malformed(msg));

    let language = block
        .headers
        .get("language")
        .cloned()
        .or_else(|| opts.default_language.clone())
        .ok_or_else(|| malformed("missing language header".into()))?;

    let text = match block.headers.get("text") {
        Some(t) => t.clone(),
        None => block
            .rows
            .iter()
            .map(|(tok, _)| *tok)
            .collect::<Vec<_>>()
            .join(" "),
    };
    let chars: Vec<char> = text.chars().collect();

    let mut cursor = 0;
    let mut spans: Vec<Span> = Vec::new();
    let mut open = false;
    let mut tag_type = None;
    for (tok, tag) in &block.rows {
        while cursor < chars.len() && chars[cursor].is_whitespace() {
            cursor += 1;
        }
        let tok_chars: Vec<char> = tok.chars().collect();
        let end = cursor + tok_chars.len();
        if end > chars.len() || chars[cursor..end] != tok_chars[..] {
            return Err(malformed(format!(
                "token `{tok}` does not match text at char {cursor}"
            )));
        }
        let (kind, ty) = tag_kind(tag).map_err(&malformed)?;
        if ty.is_some() {
            tag_type = ty;
        }
        match kind {
            'B' => {
                spans.push(Span(cursor, end));
                open = true;
            }
            'I' if open => {
                let last = spans.last_mut().expect("open span exists");
                last.1 = end;
            }
            'I' => {
                warnings.push(format!("{id}: I tag without preceding B; starting a new group"));
                spans.push(Span(cursor, end));
                open = true;
            }
            _ => open = false,
        }
        cursor = end;
    }

    let mwe_type = match block.headers.get("mwe_type") {
        Some(t) => t.parse().map_err(malformed)?,
        None => tag_type.unwrap_or(opts.default_mwe_type),
    };
    let surface = block.headers.get("surface").cloned().unwrap_or_else(|| {
        collapse_whitespace(
            &spans
                .iter()
                .map(|s| char_slice(&text, s.start(), s.end()))
                .collect::<Vec<_>>()
                .join(" "),
        )
    });
    Ok(MweInstance {
        id: id.clone(),
        language,
        text,
        mwe_type,
        spans,
        surface,
        source: block.headers.get("source").cloned().unwrap_or_default(),
        translation: block.headers.get("translation").cloned(),
    })
}

pub(super) fn parse(content: &str, opts: &LoadOptions) -> Result<Parsed, CorpusError> {
    let mut parsed = Parsed {
        records: Vec::new(),
        errors: Vec::new(),
        warnings: Vec::new(),
        n_records: 0,
    };
    let blocks = match blocks(content) {
        Ok(b) => b,
        Err(e) => {
            parsed.n_records = 1;
            parsed.errors.push(e);
            return Ok(parsed);
        }
    };
    parsed.n_records = blocks.len();
    for (i, block) in blocks.iter().enumerate() {
        match parse_block(block, i, opts, &mut parsed.warnings) {
            Ok(inst) => parsed.records.push((block.line, inst)),
            Err(e) => parsed.errors.push(e),
        }
    }
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{convert_corpus, parse_corpus, CorpusFormat};

    fn instance() -> MweInstance {
        MweInstance {
            id: "en-001".into(),
            language: "en".into(),
            text: "They covered the whole field from A to Z in eight classes.".into(),
            mwe_type: MweType::Idiom,
            spans: vec![Span(29, 40)],
            surface: "from A to Z".into(),
            source: String::new(),
            translation: None,
        }
    }

    #[test]
    fn tags_from_a_to_z() {
        let c = Corpus::new("t", vec![instance()]).unwrap();
        let out = String::from_utf8(convert_corpus(&c, CorpusFormat::BioTagged).unwrap().bytes).unwrap();
        let tags: Vec<&str> = out
            .lines()
            .filter_map(|l| l.split_once('\t'))
            .map(|(_, t)| t)
            .collect();
        assert_eq!(
            tags,
            ["O", "O", "O", "O", "O", B_TAG, I_TAG, I_TAG, I_TAG, "O", "O", "O", "O"]
        );
    }

    #[test]
    fn bare_tokens_recover_spans_by_detokenization() {
        let content = "They\tO\ncovered\tO\nthe\tO\nwhole\tO\nfield\tO\nfrom\tB-IDIOM\nA\tI-IDIOM\nto\tI-IDIOM\nZ\tI-IDIOM\nin\tO\neight\tO\nclasses\tO\n.\tO\n";
        let opts = LoadOptions {
            default_language: Some("en".into()),
            ..Default::default()
        };
        let out = parse_corpus(content, CorpusFormat::BioTagged, &opts).unwrap();
        let inst = &out.corpus.instances[0];
        assert_eq!(inst.mwe_type, MweType::Idiom);
        assert_eq!(inst.span_texts(), ["from A to Z"]);
        assert_eq!(inst.surface, "from A to Z");
    }

    #[test]
    fn trailing_whitespace_span_is_trimmed_with_warning() {
        let mut inst = instance();
        inst.spans = vec![Span(29, 41)];
        let c = Corpus::new("t", vec![inst]).unwrap();
        let conv = convert_corpus(&c, CorpusFormat::BioTagged).unwrap();
        assert_eq!(conv.warnings.len(), 1);
        let back = parse_corpus(
            std::str::from_utf8(&conv.bytes).unwrap(),
            CorpusFormat::BioTagged,
            &LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(back.corpus.instances[0].spans, vec![Span(29, 40)]);
    }

    #[test]
    fn discontiguous_spans_become_groups() {
        let inst = MweInstance {
            id: "pl-1".into(),
            language: "pl".into(),
            text: "Z wielkim trudem kojarzył".into(),
            mwe_type: MweType::Msu,
            spans: vec![Span(0, 1), Span(10, 16)],
            surface: "Z trudem".into(),
            source: String::new(),
            translation: None,
        };
        let c = Corpus::new("t", vec![inst.clone()]).unwrap();
        let conv = convert_corpus(&c, CorpusFormat::BioTagged).unwrap();
        assert!(conv.warnings[0].contains("discontiguous"));
        let back = parse_corpus(
            std::str::from_utf8(&conv.bytes).unwrap(),
            CorpusFormat::BioTagged,
            &LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(back.corpus.instances[0], inst);
    }

    #[test]
    fn token_text_mismatch_is_record_error() {
        let content = "# id = a\n# language = en\n# text = hello world\nhello\tO\nplanet\tB-MWE\n";
        let err = parse_corpus(content, CorpusFormat::BioTagged, &LoadOptions::default()).unwrap_err();
        // the only record failed, so the corpus is empty
        assert!(matches!(err, CorpusError::Empty));
    }
}
