use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use crate::geometry::{wkt, BBox, BBoxIndex, Geometry};

use super::ntriples;
use super::schema::{PredicateDef, Schema};
use super::term::{is_absolute_iri, wkt_nt};
use super::vocab::{cmo, prop};
use super::{GeomHandle, Literal, StoreError, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub u32);

const MIN: TermId = TermId(0);
const MAX: TermId = TermId(u32::MAX);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        Self {
            subject,
            predicate,
            object,
        }
    }
}

/// Which permutation index serves a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    Spo,
    Pos,
    Osp,
}

impl IndexKind {
    pub const ALL: [IndexKind; 3] = [IndexKind::Spo, IndexKind::Pos, IndexKind::Osp];

    fn permute(self, (s, p, o): (TermId, TermId, TermId)) -> (TermId, TermId, TermId) {
        match self {
            IndexKind::Spo => (s, p, o),
            IndexKind::Pos => (p, o, s),
            IndexKind::Osp => (o, s, p),
        }
    }

    fn unpermute(self, (a, b, c): (TermId, TermId, TermId)) -> (TermId, TermId, TermId) {
        match self {
            IndexKind::Spo => (a, b, c),
            IndexKind::Pos => (c, a, b),
            IndexKind::Osp => (b, c, a),
        }
    }

    /// Index whose key order starts with the bound positions.
    fn best(s: bool, p: bool, o: bool) -> IndexKind {
        match (s, p, o) {
            (true, false, true) => IndexKind::Osp,
            (false, true, _) => IndexKind::Pos,
            (false, false, true) => IndexKind::Osp,
            _ => IndexKind::Spo,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    term: Term,
    key: OnceLock<String>,
}

/// One map feature as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureView {
    pub iri: String,
    pub feature_type: String,
    pub year: i32,
    pub sheet: String,
    pub geometry: Option<Geometry>,
    pub municipalities: Vec<String>,
    pub area_sqm: Option<i64>,
    pub length_m: Option<i64>,
    pub current_name: Option<String>,
    pub osm_id: Option<String>,
}

/// In-memory triple store with SPO, POS and OSP indexes.
///
/// A store is built by a single writer and then sealed; a sealed store is
/// immutable and can be shared freely between threads.
#[derive(Debug, Clone)]
pub struct Store {
    schema: Arc<Schema>,
    terms: Vec<Entry>,
    ids: HashMap<Term, TermId>,
    spo: BTreeSet<(TermId, TermId, TermId)>,
    pos: BTreeSet<(TermId, TermId, TermId)>,
    osp: BTreeSet<(TermId, TermId, TermId)>,
    geometries: Vec<Geometry>,
    sealed: bool,
    spatial: Option<BBoxIndex<TermId>>,
}

impl Default for Store {
    fn default() -> Self {
        Self::new(Schema::chronomap())
    }
}

impl Store {
    pub fn new(schema: Schema) -> Self {
        Self {
            schema: Arc::new(schema),
            terms: Vec::new(),
            ids: HashMap::new(),
            spo: BTreeSet::new(),
            pos: BTreeSet::new(),
            osp: BTreeSet::new(),
            geometries: Vec::new(),
            sealed: false,
            spatial: None,
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    fn intern(&mut self, t: Term) -> TermId {
        if let Some(id) = self.ids.get(&t) {
            return *id;
        }
        let id = TermId(self.terms.len() as u32);
        self.terms.push(Entry {
            term: t.clone(),
            key: OnceLock::new(),
        });
        self.ids.insert(t, id);
        id
    }

    pub fn lookup(&self, t: &Term) -> Option<TermId> {
        self.ids.get(t).copied()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id.0 as usize].term
    }

    /// Number of interned terms (the term universe).
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn term_ids(&self) -> impl Iterator<Item = TermId> {
        (0..self.terms.len() as u32).map(TermId)
    }

    /// N-Triples serialization of a term; also its sort key.
    pub fn term_key(&self, id: TermId) -> &str {
        let entry = &self.terms[id.0 as usize];
        entry.key.get_or_init(|| self.serialize(&entry.term))
    }

    pub fn serialize(&self, t: &Term) -> String {
        match t {
            Term::Geometry(h) => wkt_nt(&self.wkt(*h)),
            other => other.to_string(),
        }
    }

    pub fn wkt(&self, h: GeomHandle) -> String {
        wkt::to_wkt(&self.geometries[h.0 as usize])
    }

    pub fn geometry(&self, h: GeomHandle) -> Option<&Geometry> {
        self.geometries.get(h.0 as usize)
    }

    /// Registers a geometry in the side table and returns a term referring to it.
    pub fn add_geometry(&mut self, g: Geometry) -> Result<Term, StoreError> {
        if self.sealed {
            return Err(StoreError::Sealed);
        }
        g.validate()?;
        self.geometries.push(g);
        Ok(Term::Geometry(GeomHandle(self.geometries.len() as u32 - 1)))
    }

    fn check(&self, t: &Triple) -> Result<(), StoreError> {
        let Some(s) = t.subject.as_iri() else {
            return Err(StoreError::InvalidTerm(format!("subject {} is not an IRI", t.subject)));
        };
        if !is_absolute_iri(s) {
            return Err(StoreError::InvalidTerm(format!("subject <{s}> is not absolute")));
        }
        let Some(p) = t.predicate.as_iri() else {
            return Err(StoreError::InvalidTerm(format!("predicate {} is not an IRI", t.predicate)));
        };
        match self.schema.lookup(p) {
            None => Err(StoreError::SchemaViolation {
                predicate: p.to_string(),
                line: None,
            }),
            Some(PredicateDef::Property(def)) => {
                if !def.range.admits(&t.object) {
                    return Err(StoreError::TypeViolation {
                        predicate: p.to_string(),
                        expected: def.range.as_str(),
                        found: t.object.to_string(),
                    });
                }
                if let Term::Geometry(h) = t.object {
                    if self.geometry(h).is_none() {
                        return Err(StoreError::InvalidTerm(format!("dangling geometry handle {}", h.0)));
                    }
                }
                Ok(())
            }
            Some(PredicateDef::Relation(_)) => match t.object.as_iri() {
                Some(o) if is_absolute_iri(o) => Ok(()),
                _ => Err(StoreError::TypeViolation {
                    predicate: p.to_string(),
                    expected: "iri",
                    found: t.object.to_string(),
                }),
            },
        }
    }

    /// Adds a triple; returns whether it was new.
    pub fn insert(&mut self, t: Triple) -> Result<bool, StoreError> {
        if self.sealed {
            return Err(StoreError::Sealed);
        }
        self.check(&t)?;
        let key = (self.intern(t.subject), self.intern(t.predicate), self.intern(t.object));
        if !self.spo.insert(key) {
            return Ok(false);
        }
        self.pos.insert(IndexKind::Pos.permute(key));
        self.osp.insert(IndexKind::Osp.permute(key));
        Ok(true)
    }

    /// Ends the build phase. Sealing twice is a no-op.
    pub fn seal(&mut self) {
        if self.sealed {
            return;
        }
        let mut items = Vec::new();
        if let Some(wkt_p) = self.lookup(&cmo(prop::WKT)) {
            for (s, _, o) in self.match_ids(None, Some(wkt_p), None) {
                if let Term::Geometry(h) = self.term(o) {
                    items.push((self.geometries[h.0 as usize].bbox(), s));
                }
            }
        }
        self.spatial = Some(BBoxIndex::new(items));
        self.sealed = true;
    }

    fn index(&self, kind: IndexKind) -> &BTreeSet<(TermId, TermId, TermId)> {
        match kind {
            IndexKind::Spo => &self.spo,
            IndexKind::Pos => &self.pos,
            IndexKind::Osp => &self.osp,
        }
    }

    pub fn contains_ids(&self, t: (TermId, TermId, TermId)) -> bool {
        self.spo.contains(&t)
    }

    /// Matches through a specific index; unbound positions not in its key
    /// prefix are filtered after the range scan.
    pub fn match_ids_with(
        &self,
        kind: IndexKind,
        s: Option<TermId>,
        p: Option<TermId>,
        o: Option<TermId>,
    ) -> Vec<(TermId, TermId, TermId)> {
        let (a, b, c) = match kind {
            IndexKind::Spo => (s, p, o),
            IndexKind::Pos => (p, o, s),
            IndexKind::Osp => (o, s, p),
        };
        // range over the longest bound prefix of the key order
        let bound = |x: Option<TermId>, prefix: bool, dflt: TermId| if prefix { x.unwrap_or(dflt) } else { dflt };
        let (pa, pb) = (a.is_some(), a.is_some() && b.is_some());
        let lo = (bound(a, true, MIN), bound(b, pa, MIN), bound(c, pb, MIN));
        let hi = (bound(a, true, MAX), bound(b, pa, MAX), bound(c, pb, MAX));
        self.index(kind)
            .range(lo..=hi)
            .filter(|(x, y, z)| {
                a.is_none_or(|v| v == *x) && b.is_none_or(|v| v == *y) && c.is_none_or(|v| v == *z)
            })
            .map(|k| kind.unpermute(*k))
            .collect()
    }

    /// Matches through the index whose key order begins with the bound positions.
    pub fn match_ids(
        &self,
        s: Option<TermId>,
        p: Option<TermId>,
        o: Option<TermId>,
    ) -> Vec<(TermId, TermId, TermId)> {
        let kind = IndexKind::best(s.is_some(), p.is_some(), o.is_some());
        self.match_ids_with(kind, s, p, o)
    }

    /// All triples matching the bound positions, ordered by the serialization
    /// of subject, predicate and object.
    pub fn match_pattern(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<Triple> {
        let resolve = |t: Option<&Term>| match t {
            None => Some(None),
            Some(t) => self.lookup(t).map(Some),
        };
        let (Some(s), Some(p), Some(o)) = (resolve(s), resolve(p), resolve(o)) else {
            return Vec::new();
        };
        let mut ids = self.match_ids(s, p, o);
        self.sort_ids(&mut ids);
        ids.into_iter().map(|k| self.triple(k)).collect()
    }

    fn sort_ids(&self, ids: &mut [(TermId, TermId, TermId)]) {
        ids.sort_by(|x, y| {
            self.term_key(x.0)
                .cmp(self.term_key(y.0))
                .then_with(|| self.term_key(x.1).cmp(self.term_key(y.1)))
                .then_with(|| self.term_key(x.2).cmp(self.term_key(y.2)))
        });
    }

    pub fn triple(&self, (s, p, o): (TermId, TermId, TermId)) -> Triple {
        Triple::new(self.term(s).clone(), self.term(p).clone(), self.term(o).clone())
    }

    /// Every triple, in canonical order.
    pub fn triples(&self) -> Vec<Triple> {
        self.match_pattern(None, None, None)
    }

    /// Distinct objects of a predicate, in canonical order.
    pub fn distinct_objects(&self, predicate: &Term) -> Vec<Term> {
        let Some(p) = self.lookup(predicate) else {
            return Vec::new();
        };
        let mut objs: Vec<TermId> = self.match_ids(None, Some(p), None).into_iter().map(|t| t.2).collect();
        objs.sort_by(|a, b| self.term_key(*a).cmp(self.term_key(*b)));
        objs.dedup();
        objs.into_iter().map(|o| self.term(o).clone()).collect()
    }

    /// Single object of `(s, p, ?)`, if any.
    pub fn object(&self, s: &Term, p: &Term) -> Option<Term> {
        self.match_pattern(Some(s), Some(p), None).into_iter().next().map(|t| t.object)
    }

    /// Geometry attached to a feature through `cmo:wkt`.
    pub fn feature_geometry(&self, feature: &Term) -> Option<&Geometry> {
        match self.object(feature, &cmo(prop::WKT))? {
            Term::Geometry(h) => self.geometry(h),
            _ => None,
        }
    }

    /// Features whose geometry bounding box intersects `bbox`. Requires a sealed store.
    pub fn features_in_bbox(&self, bbox: &BBox) -> Vec<Term> {
        match &self.spatial {
            Some(index) => index.search(bbox).map(|id| self.term(*id).clone()).collect(),
            None => Vec::new(),
        }
    }

    /// Relation edges whose declared inverse edge is missing.
    pub fn inverse_violations(&self) -> Vec<Triple> {
        let mut out = Vec::new();
        for r in &self.schema.relations {
            let Some(inv) = &r.inverse else { continue };
            let Some(p) = self.lookup(&Term::iri(&r.iri)) else {
                continue;
            };
            let inv_id = self.lookup(&Term::iri(inv));
            for (s, _, o) in self.match_ids(None, Some(p), None) {
                let present = inv_id.is_some_and(|q| self.spo.contains(&(o, q, s)));
                if !present {
                    out.push(self.triple((s, p, o)));
                }
            }
        }
        out
    }

    /// Features with their properties, ordered by IRI.
    pub fn features(&self) -> Vec<FeatureView> {
        let Some(type_p) = self.lookup(&cmo(prop::FEATURE_TYPE)) else {
            return Vec::new();
        };
        let mut subjects: Vec<TermId> = self.match_ids(None, Some(type_p), None).into_iter().map(|t| t.0).collect();
        subjects.sort_by(|a, b| self.term_key(*a).cmp(self.term_key(*b)));
        subjects.dedup();
        subjects.into_iter().map(|s| self.feature_view(s)).collect()
    }

    fn feature_view(&self, s: TermId) -> FeatureView {
        let mut v = FeatureView {
            iri: self.term(s).as_iri().unwrap_or_default().to_string(),
            feature_type: String::new(),
            year: 0,
            sheet: String::new(),
            geometry: None,
            municipalities: Vec::new(),
            area_sqm: None,
            length_m: None,
            current_name: None,
            osm_id: None,
        };
        let mut triples = self.match_ids(Some(s), None, None);
        self.sort_ids(&mut triples);
        for (_, p, o) in triples {
            let Some(local) = self.term(p).as_iri().and_then(|i| i.strip_prefix(super::vocab::CMO)) else {
                continue;
            };
            let obj = self.term(o);
            let text = || obj.as_str().map(str::to_string);
            match local {
                prop::FEATURE_TYPE => v.feature_type = text().unwrap_or_default(),
                prop::YEAR => v.year = obj.as_i64().unwrap_or_default() as i32,
                prop::SHEET => v.sheet = text().unwrap_or_default(),
                prop::MUNICIPALITY => v.municipalities.extend(text()),
                prop::AREA_SQM => v.area_sqm = obj.as_i64(),
                prop::LENGTH_M => v.length_m = obj.as_i64(),
                prop::CURRENT_NAME => v.current_name = text(),
                prop::OSM_ID => v.osm_id = text(),
                prop::WKT => {
                    if let Term::Geometry(h) = obj {
                        v.geometry = self.geometry(*h).cloned();
                    }
                }
                _ => {}
            }
        }
        v
    }

    /// Canonical N-Triples text: one triple per line, lines sorted.
    pub fn dump_string(&self) -> String {
        let mut lines: Vec<String> = self
            .spo
            .iter()
            .map(|&(s, p, o)| format!("{} {} {} .", self.term_key(s), self.term_key(p), self.term_key(o)))
            .collect();
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }

    /// Path of the schema document written next to a dump.
    pub fn schema_path(path: &Path) -> PathBuf {
        path.with_extension("schema.json")
    }

    /// Writes the triples and, alongside, the schema JSON.
    pub fn dump(&self, path: &Path) -> Result<(), StoreError> {
        if !self.sealed {
            return Err(StoreError::NotSealed);
        }
        let io = |e: std::io::Error| StoreError::Io(format!("{}: {e}", path.display()));
        fs::write(path, self.dump_string()).map_err(io)?;
        fs::write(Self::schema_path(path), self.schema.to_json()).map_err(io)?;
        Ok(())
    }

    /// Reads a dump in build phase. The schema comes from the sidecar file
    /// when present, otherwise the default catalog applies.
    pub fn load(path: &Path) -> Result<Store, StoreError> {
        let io = |e: std::io::Error| StoreError::Io(format!("{}: {e}", path.display()));
        let text = fs::read_to_string(path).map_err(io)?;
        let schema_path = Self::schema_path(path);
        let schema = if schema_path.exists() {
            Schema::from_json(&fs::read_to_string(&schema_path).map_err(io)?)?
        } else {
            Schema::chronomap()
        };
        Self::load_str(&text, schema)
    }

    pub fn load_str(text: &str, schema: Schema) -> Result<Store, StoreError> {
        let mut store = Store::new(schema);
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let Some(raw) = ntriples::parse_line(line).map_err(|message| StoreError::Parse {
                line: line_no,
                message,
            })?
            else {
                continue;
            };
            let object = match raw.object {
                ntriples::RawObject::Iri(iri) => Term::iri(iri),
                ntriples::RawObject::Literal { lexical, datatype } => {
                    if datatype == super::vocab::GEO_WKT_LITERAL {
                        let g = wkt::parse(&lexical).map_err(|e| StoreError::Parse {
                            line: line_no,
                            message: e.to_string(),
                        })?;
                        store.add_geometry(g)?
                    } else {
                        Term::Literal(Literal::from_lexical(&lexical, &datatype).map_err(|e| {
                            StoreError::Parse {
                                line: line_no,
                                message: e.to_string(),
                            }
                        })?)
                    }
                }
            };
            let t = Triple::new(Term::iri(raw.subject), Term::iri(raw.predicate), object);
            store.insert(t).map_err(|e| e.at_line(line_no))?;
        }
        Ok(store)
    }
}
