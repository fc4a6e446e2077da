use super::CliError;

/// Expand `--config FILE` into the flags it contains.
///
/// The file holds `key=value` lines (`#` comments and blanks ignored); each
/// key becomes `--key value`, a bare `key=true` becomes `--key`. Expanded
/// flags are inserted before every user-given flag, and later occurrences
/// win, so explicit flags always take precedence over the file.
pub fn expand_config_args(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(cfg_pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(argv);
    };
    let (path, consumed) = if let Some(eq) = argv[cfg_pos].strip_prefix("--config=") {
        (eq.to_string(), 1)
    } else {
        let p = argv.get(cfg_pos + 1).ok_or_else(|| {
            CliError::Usage("--config requires a file path".into())
        })?;
        (p.clone(), 2)
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("--config {path}: {e}")))?;

    let mut expanded: Vec<String> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("{path}:{}: expected key=value", i + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        match value {
            "true" => expanded.push(format!("--{key}")),
            "false" => {}
            v => {
                expanded.push(format!("--{key}"));
                expanded.push(v.to_string());
            }
        }
    }

    let mut out: Vec<String> = Vec::with_capacity(argv.len() + expanded.len());
    let insert_at = argv
        .iter()
        .position(|a| a.starts_with("--"))
        .unwrap_or(argv.len());
    out.extend_from_slice(&argv[..insert_at]);
    out.extend(expanded);
    for (i, a) in argv.iter().enumerate().skip(insert_at) {
        if i == cfg_pos || (consumed == 2 && i == cfg_pos + 1) {
            continue;
        }
        out.push(a.clone());
    }
    Ok(out)
}
