//! Minimal CoNLL-U reader: FORM (column 2), UPOS (column 4) and DEPREL
//! (column 8) of every basic token line. Multiword ranges (`1-2`) and empty
//! nodes (`3.1`) are skipped.

use super::FinetuneError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UdSentence {
    pub sent_id: Option<String>,
    pub forms: Vec<String>,
    pub upos: Vec<String>,
    pub deprel: Vec<String>,
}

pub fn parse_conllu(content: &str, source: &str) -> Result<Vec<UdSentence>, FinetuneError> {
    let mut out = Vec::new();
    let mut cur = UdSentence {
        sent_id: None,
        forms: Vec::new(),
        upos: Vec::new(),
        deprel: Vec::new(),
    };
    let flush = |cur: &mut UdSentence, out: &mut Vec<UdSentence>| {
        if !cur.forms.is_empty() {
            out.push(std::mem::replace(
                cur,
                UdSentence {
                    sent_id: None,
                    forms: Vec::new(),
                    upos: Vec::new(),
                    deprel: Vec::new(),
                },
            ));
        } else {
            cur.sent_id = None;
        }
    };
    for (i, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut cur, &mut out);
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                if k.trim() == "sent_id" {
                    cur.sent_id = Some(v.trim().to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(FinetuneError::Parse {
                file: source.to_string(),
                line: i + 1,
                message: format!("expected 10 tab-separated columns, got {}", cols.len()),
            });
        }
        if cols[0].contains(['-', '.']) {
            continue;
        }
        cur.forms.push(cols[1].to_string());
        cur.upos.push(cols[3].to_string());
        cur.deprel.push(cols[7].to_string());
    }
    flush(&mut cur, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# sent_id = s1\n# text = They can't go.\n\
1\tThey\tthey\tPRON\tPRP\t_\t3\tnsubj\t_\t_\n\
2-3\tcan't\t_\t_\t_\t_\t_\t_\t_\t_\n\
2\tca\tcan\tAUX\tMD\t_\t3\taux\t_\t_\n\
3\tn't\tnot\tPART\tRB\t_\t0\troot\t_\t_\n\
3.1\tgo\tgo\tVERB\tVB\t_\t_\t_\t_\t_\n\
4\t.\t.\tPUNCT\t.\t_\t3\tpunct\t_\t_\n\n";

    #[test]
    fn reads_basic_tokens() {
        let s = parse_conllu(SAMPLE, "t").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].sent_id.as_deref(), Some("s1"));
        assert_eq!(s[0].forms, ["They", "ca", "n't", "."]);
        assert_eq!(s[0].upos, ["PRON", "AUX", "PART", "PUNCT"]);
        assert_eq!(s[0].deprel, ["nsubj", "aux", "root", "punct"]);
    }

    #[test]
    fn short_rows_are_errors() {
        let err = parse_conllu("1\tx\tx\n", "bad.conllu").unwrap_err();
        assert!(err.to_string().contains("bad.conllu:1"));
    }
}
