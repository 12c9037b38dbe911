use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A textual reference `name(key=value,...)` naming a registry object.
///
/// Values are kept raw; a value may itself be a nested reference.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reference {
    name: String,
    params: BTreeMap<String, String>,
}

impl Reference {
    pub fn new(name: impl Into<String>) -> Self {
        Reference {
            name: name.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    pub fn parse(input: &str) -> Result<Self> {
        let text = input.trim();
        let fail = |reason: &str| Error::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let (name, rest) = match text.find('(') {
            None => (text, None),
            Some(open) => {
                if !text.ends_with(')') {
                    return Err(fail("missing closing parenthesis"));
                }
                (&text[..open], Some(&text[open + 1..text.len() - 1]))
            }
        };
        let name = name.trim();
        if name.is_empty() || !name.chars().all(is_ident_char) {
            return Err(fail("bad name"));
        }
        let mut params = BTreeMap::new();
        if let Some(body) = rest {
            for item in split_top_level(body).map_err(|r| fail(&r))? {
                if item.trim().is_empty() {
                    continue;
                }
                let eq = item.find('=').ok_or_else(|| fail("parameter without `=`"))?;
                let key = item[..eq].trim();
                if key.is_empty() || !key.chars().all(is_ident_char) {
                    return Err(fail("bad parameter name"));
                }
                let value = item[eq + 1..].trim();
                if params.insert(key.to_string(), value.to_string()).is_some() {
                    return Err(fail("duplicate parameter"));
                }
            }
        }
        Ok(Reference {
            name: name.to_string(),
            params,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    /// Rejects parameters outside `allowed`.
    pub fn expect_keys(&self, allowed: &[&str]) -> Result<()> {
        for key in self.params.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::invalid(&self.name, key, "unexpected parameter"));
            }
        }
        Ok(())
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| Error::invalid(&self.name, key, format!("`{v}` is not an integer"))),
        }
    }

    pub fn big_or(&self, key: &str, default: u64) -> Result<BigUint> {
        match self.raw(key) {
            None => Ok(BigUint::from(default)),
            Some(v) => {
                BigUint::from_str(v).map_err(|_| Error::invalid(&self.name, key, format!("`{v}` is not an integer")))
            }
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    pub fn nested(&self, key: &str) -> Result<Reference> {
        let raw = self
            .raw(key)
            .ok_or_else(|| Error::invalid(&self.name, key, "missing"))?;
        Reference::parse(raw)
    }

    pub fn nested_or(&self, key: &str, default: &str) -> Result<Reference> {
        Reference::parse(self.raw(key).unwrap_or(default))
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == ':' || c == '.' || c == '/'
}

fn split_top_level(body: &str) -> std::result::Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in body.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| "unbalanced parentheses".to_string())?
            }
            ',' if depth == 0 => {
                out.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced parentheses".into());
    }
    out.push(&body[start..]);
    Ok(out)
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            f.write_str("(")?;
            for (i, (k, v)) in self.params.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{k}={v}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl FromStr for Reference {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Reference::parse(s)
    }
}

impl Serialize for Reference {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Reference {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Reference::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_and_round_trips() {
        let r = Reference::parse("permuted_prefix(base=cyclic(w=011),n=2,a=1,b=0)").unwrap();
        assert_eq!(r.name(), "permuted_prefix");
        assert_eq!(r.raw("base"), Some("cyclic(w=011)"));
        assert_eq!(r.nested("base").unwrap().raw("w"), Some("011"));
        assert_eq!(r.to_string(), "permuted_prefix(a=1,b=0,base=cyclic(w=011),n=2)");
        assert_eq!(Reference::parse(&r.to_string()).unwrap(), r);
    }

    #[test]
    fn bare_and_empty_forms() {
        assert_eq!(Reference::parse("sigma_family").unwrap().to_string(), "sigma_family");
        assert_eq!(Reference::parse("sigma_family()").unwrap().to_string(), "sigma_family");
        let r = Reference::parse("growing_zeros(head=,tail=11)").unwrap();
        assert_eq!(r.raw("head"), Some(""));
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "a(b", "a(b=1", "a(b=(1)", "a(=1)", "a(b)", "a(b=1,b=2)"] {
            assert!(Reference::parse(bad).is_err(), "{bad}");
        }
    }
}
