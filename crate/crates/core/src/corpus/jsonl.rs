use super::{Converted, Corpus, MweInstance, Parsed, RecordError, RecordErrorKind};

pub(super) fn parse(content: &str) -> Parsed {
    let mut parsed = Parsed {
        records: Vec::new(),
        errors: Vec::new(),
        warnings: Vec::new(),
        n_records: 0,
    };
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        parsed.n_records += 1;
        match serde_json::from_str::<MweInstance>(line) {
            Ok(inst) => parsed.records.push((line_no, inst)),
            Err(e) => {
                // Recover the id for the error report when the line is at least JSON.
                let id = serde_json::from_str::<serde_json::Value>(line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|id| id.as_str()).map(String::from));
                parsed.errors.push(RecordError::new(
                    line_no,
                    id,
                    RecordErrorKind::Malformed(e.to_string()),
                ));
            }
        }
    }
    parsed
}

pub(super) fn write(corpus: &Corpus) -> Converted {
    let mut bytes = Vec::new();
    for inst in &corpus.instances {
        serde_json::to_writer(&mut bytes, inst).expect("instance serializes");
        bytes.push(b'\n');
    }
    Converted {
        bytes,
        warnings: Vec::new(),
    }
}
