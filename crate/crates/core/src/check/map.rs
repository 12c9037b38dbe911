use std::any::Any;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::strings::InfiniteString;

/// Which reduction type a map claims to be.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    ManyOne,
    OneOne,
    Permutation,
}

impl MapKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "many_one" | "mqi" => Ok(MapKind::ManyOne),
            "one_one" | "1qi" => Ok(MapKind::OneOne),
            "permutation" | "pqi" => Ok(MapKind::Permutation),
            _ => Err(Error::Unknown {
                what: "map kind",
                name: s.to_string(),
            }),
        }
    }

    pub fn injective(self) -> bool {
        !matches!(self, MapKind::ManyOne)
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapKind::ManyOne => "many_one",
            MapKind::OneOne => "one_one",
            MapKind::Permutation => "permutation",
        })
    }
}

/// The evaluation half of a reduction.
pub trait PositionMap: Send + Sync {
    fn image(&self, x: u64) -> u64;

    /// Maps positions beyond `u64`. Maps that never see such positions may
    /// keep the default, which panics there.
    fn image_big(&self, x: &BigUint) -> BigUint {
        let v = x.to_u64().expect("this map is only defined on 64-bit positions");
        BigUint::from(self.image(v))
    }

    /// Largest position the map is defined on, when bounded.
    fn domain_limit(&self) -> Option<u64> {
        None
    }
}

struct FnMap<F>(F);

impl<F: Fn(u64) -> u64 + Send + Sync> PositionMap for FnMap<F> {
    fn image(&self, x: u64) -> u64 {
        (self.0)(x)
    }
}

/// A map given by an explicit table `f(1), ..., f(n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableMap(pub Vec<u64>);

impl PositionMap for TableMap {
    fn image(&self, x: u64) -> u64 {
        match self.0.get((x as usize).wrapping_sub(1)) {
            Some(&v) => v,
            None => panic!("table map undefined at {x} (length {})", self.0.len()),
        }
    }

    fn domain_limit(&self) -> Option<u64> {
        Some(self.0.len() as u64)
    }
}

/// A candidate reduction from `source` to `target`.
#[derive(Clone)]
pub struct ReductionMap {
    name: String,
    source: InfiniteString,
    target: InfiniteString,
    map: Arc<dyn PositionMap>,
    declared_c: u64,
    kind: MapKind,
    structure: Option<Arc<dyn Any + Send + Sync>>,
}

impl fmt::Debug for ReductionMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ReductionMap({}: {} -> {}, C={}, {})",
            self.name,
            self.source.reference(),
            self.target.reference(),
            self.declared_c,
            self.kind
        )
    }
}

impl ReductionMap {
    pub fn new(
        name: impl Into<String>,
        source: InfiniteString,
        target: InfiniteString,
        map: Arc<dyn PositionMap>,
        declared_c: u64,
        kind: MapKind,
    ) -> Result<Self> {
        if declared_c < 1 {
            return Err(Error::Domain("declared C must be at least 1".into()));
        }
        Ok(ReductionMap {
            name: name.into(),
            source,
            target,
            map,
            declared_c,
            kind,
            structure: None,
        })
    }

    pub fn from_fn(
        name: impl Into<String>,
        source: InfiniteString,
        target: InfiniteString,
        declared_c: u64,
        kind: MapKind,
        f: impl Fn(u64) -> u64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(name, source, target, Arc::new(FnMap(f)), declared_c, kind)
    }

    pub fn from_table(
        name: impl Into<String>,
        source: InfiniteString,
        target: InfiniteString,
        table: Vec<u64>,
        declared_c: u64,
        kind: MapKind,
    ) -> Result<Self> {
        Self::new(name, source, target, Arc::new(TableMap(table)), declared_c, kind)
    }

    /// Attaches a typed description of the map's internal structure, which
    /// analyses may recover with [`ReductionMap::structure`].
    pub fn with_structure(mut self, s: Arc<dyn Any + Send + Sync>) -> Self {
        self.structure = Some(s);
        self
    }

    pub fn structure<T: Any>(&self) -> Option<&T> {
        self.structure.as_ref()?.downcast_ref::<T>()
    }

    pub fn with_declared_c(mut self, c: u64) -> Result<Self> {
        if c < 1 {
            return Err(Error::Domain("declared C must be at least 1".into()));
        }
        self.declared_c = c;
        Ok(self)
    }

    pub fn with_kind(mut self, kind: MapKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &InfiniteString {
        &self.source
    }

    pub fn target(&self) -> &InfiniteString {
        &self.target
    }

    pub fn declared_c(&self) -> u64 {
        self.declared_c
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn position_map(&self) -> &Arc<dyn PositionMap> {
        &self.map
    }

    pub fn domain_limit(&self) -> Option<u64> {
        self.map.domain_limit()
    }

    /// `f(x)`. Panics if `x == 0`.
    pub fn map_at(&self, x: u64) -> u64 {
        assert!(x >= 1, "positions start at 1");
        self.map.image(x)
    }

    pub fn map_at_big(&self, x: &BigUint) -> BigUint {
        match x.to_u64() {
            Some(v) => BigUint::from(self.map_at(v)),
            None => self.map.image_big(x),
        }
    }

    /// `f(1), ..., f(n)`.
    pub fn table(&self, n: u64) -> Result<Vec<u64>> {
        if let Some(limit) = self.domain_limit() {
            if n > limit {
                return Err(Error::Resource {
                    limit: "map domain",
                    detail: format!("map `{}` is defined on [1..{limit}], asked for {n}", self.name),
                });
            }
        }
        Ok((1..=n).map(|x| self.map_at(x)).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    x: u64,
    fx: u64,
}

/// Reads a two-column `x,fx` table; rows must list `x = 1, 2, ...` in order.
pub fn read_map_csv<R: Read>(reader: R) -> Result<Vec<u64>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "fx" {
        return Err(Error::Parse {
            input: headers.iter().collect::<Vec<_>>().join(","),
            reason: "expected header `x,fx`".into(),
        });
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        if row.x != out.len() as u64 + 1 {
            return Err(Error::Parse {
                input: format!("{},{}", row.x, row.fx),
                reason: format!("expected x = {}", out.len() + 1),
            });
        }
        if row.fx == 0 {
            return Err(Error::Parse {
                input: format!("{},{}", row.x, row.fx),
                reason: "positions start at 1".into(),
            });
        }
        out.push(row.fx);
    }
    Ok(out)
}

pub fn write_map_csv<W: Write>(writer: W, table: &[u64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (i, &fx) in table.iter().enumerate() {
        w.serialize(CsvRow { x: i as u64 + 1, fx })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let table = vec![1, 1, 2, 4, 3];
        let mut buf = Vec::new();
        write_map_csv(&mut buf, &table).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("x,fx\n1,1\n"));
        assert_eq!(read_map_csv(&buf[..]).unwrap(), table);
    }

    #[test]
    fn csv_rejects_gaps_and_bad_headers() {
        assert!(read_map_csv("x,fx\n1,1\n3,2\n".as_bytes()).is_err());
        assert!(read_map_csv("a,b\n1,1\n".as_bytes()).is_err());
        assert!(read_map_csv("x,fx\n1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn kinds_parse() {
        assert_eq!(MapKind::parse("pqi").unwrap(), MapKind::Permutation);
        assert_eq!(MapKind::parse("one_one").unwrap(), MapKind::OneOne);
        assert!(MapKind::parse("other").is_err());
    }
}
