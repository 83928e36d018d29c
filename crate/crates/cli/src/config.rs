use std::fs;

use clap::{Arg, Command};

use crate::error::CliError;

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// underscores in keys read as dashes.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", n + 1)));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

fn find_long<'a>(cmd: &'a Command, name: &str) -> Option<&'a Arg> {
    cmd.get_arguments().find(|a| a.get_long() == Some(name))
}

/// Index just past the subcommand path in `args`, and the leaf command.
fn subcommand_end<'a>(root: &'a Command, args: &[String]) -> (usize, &'a Command) {
    let mut current = root;
    let mut end = 1;
    let mut i = 1;
    while i < args.len() {
        let tok = &args[i];
        if let Some(flag) = tok.strip_prefix("--") {
            let takes_value = find_long(root, flag).is_some_and(|a| a.get_action().takes_values());
            i += if takes_value { 2 } else { 1 };
            continue;
        }
        match current.find_subcommand(tok) {
            Some(sub) => {
                current = sub;
                i += 1;
                end = i;
            }
            None => break,
        }
    }
    (end, current)
}

/// Flag tokens for one `key`/`value` pair; switches expand to the bare flag
/// when true and vanish when false.
fn tokens_for(arg: &Arg, key: &str, value: &str) -> Result<Vec<String>, CliError> {
    if arg.get_action().takes_values() {
        return Ok(vec![format!("--{key}"), value.to_string()]);
    }
    match value {
        "true" => Ok(vec![format!("--{key}")]),
        "false" => Ok(Vec::new()),
        other => Err(CliError::Usage(format!("`{key}` is a switch; `{other}` is not true or false"))),
    }
}

/// Splices `pairs` in right after the subcommand path so that flags given
/// on the command line still win.
pub fn splice(root: &Command, args: Vec<String>, pairs: &[(String, String)]) -> Result<Vec<String>, CliError> {
    let (end, leaf) = subcommand_end(root, &args);
    let mut tokens = Vec::new();
    for (key, value) in pairs {
        let arg = find_long(leaf, key)
            .or_else(|| find_long(root, key).filter(|a| a.is_global_set()))
            .ok_or_else(|| CliError::Usage(format!("unknown key `{key}` for `{}`", leaf.get_name())))?;
        if key == "config" {
            return Err(CliError::Usage("a config file cannot name another config file".into()));
        }
        tokens.extend(tokens_for(arg, key, value)?);
    }
    let mut out = args[..end].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&args[end..]);
    Ok(out)
}

/// Applies the file named by `--config`, if any.
pub fn inject(root: &Command, args: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(path.clone(), e))?;
    splice(root, args, &parse_config(&text)?)
}

/// Flag tokens reproducing a manifest's parameter map.
pub fn tokens_from_params(params: &serde_json::Map<String, serde_json::Value>) -> Result<Vec<String>, CliError> {
    use serde_json::Value;
    let mut out = Vec::new();
    for (key, value) in params {
        let flag = format!("--{key}");
        match value {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Number(n) => out.extend([flag, n.to_string()]),
            Value::String(s) => out.extend([flag, s.clone()]),
            Value::Array(items) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                out.extend([flag, joined.join(",")]);
            }
            Value::Object(_) => return Err(CliError::Usage(format!("manifest parameter `{key}` is nested"))),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    use crate::args::Cli;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_pairs() {
        let pairs = parse_config("# c\n\nalpha = 0.3\nmax_len=12\n").unwrap();
        assert_eq!(pairs, vec![("alpha".into(), "0.3".into()), ("max-len".into(), "12".into())]);
        assert!(parse_config("alpha 0.3").is_err());
    }

    #[test]
    fn splices_after_nested_subcommand() {
        let root = Cli::command();
        let args = strings(&["insightful", "--workers", "2", "sweep", "threshold", "--seed", "4"]);
        let pairs = vec![("seed".to_string(), "9".to_string()), ("format".to_string(), "json".to_string())];
        let out = splice(&root, args, &pairs).unwrap();
        assert_eq!(
            out,
            strings(&[
                "insightful", "--workers", "2", "sweep", "threshold", "--seed", "9", "--format", "json", "--seed", "4"
            ])
        );
    }

    #[test]
    fn switches_and_unknown_keys() {
        let root = Cli::command();
        let args = strings(&["insightful", "game"]);
        let out = splice(&root, args.clone(), &[("brute-force".into(), "true".into())]).unwrap();
        assert_eq!(out, strings(&["insightful", "game", "--brute-force"]));
        assert!(splice(&root, args.clone(), &[("brute-force".into(), "yes".into())]).is_err());
        assert!(splice(&root, args, &[("nope".into(), "1".into())]).is_err());
    }
}
