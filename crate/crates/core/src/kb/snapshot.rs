//! Binary snapshot of a [`KnowledgeBase`] for fast reloads.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   "XKBQSNAP"            8 bytes
//! version u32                   currently 1
//! counts  u64 x 5               strings, triples, names, aliases, cvt
//! strings (u32 len, utf-8)*     deduplicated, first-use order
//! triples (head u32, rel u32, tag u8, ...)*
//!         tag 0: tail u32
//!         tag 1: text u32, datatype u32, lang u32   (u32::MAX = none)
//! names   (id u32, name u32)*   sorted by id
//! aliases (surface u32, id u32)* sorted by surface then id
//! cvt     id u32*               sorted
//! ```
//!
//! Writing the same knowledge base twice yields identical bytes.

use super::{KbError, KbId, KbObject, KnowledgeBase, Literal, Relation, Triple};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

pub const MAGIC: &[u8; 8] = b"XKBQSNAP";
pub const VERSION: u32 = 1;
const NONE: u32 = u32::MAX;

#[derive(Default)]
struct StringTable {
    index: HashMap<String, u32>,
    strings: Vec<String>,
}

impl StringTable {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.strings.len() as u32;
        self.strings.push(s.to_string());
        self.index.insert(s.to_string(), i);
        i
    }

    fn intern_opt(&mut self, s: Option<&str>) -> u32 {
        s.map_or(NONE, |s| self.intern(s))
    }
}

pub fn write_snapshot<W: Write>(kb: &KnowledgeBase, mut w: W) -> Result<(), KbError> {
    let mut table = StringTable::default();
    let mut body = Vec::new();
    for t in kb.triples() {
        put_u32(&mut body, table.intern(t.head.as_str()));
        put_u32(&mut body, table.intern(t.relation.as_str()));
        match &t.tail {
            KbObject::Entity { id } => {
                body.push(0);
                put_u32(&mut body, table.intern(id.as_str()));
            }
            KbObject::Literal(lit) => {
                body.push(1);
                put_u32(&mut body, table.intern(&lit.text));
                put_u32(&mut body, table.intern_opt(lit.datatype.as_deref()));
                put_u32(&mut body, table.intern_opt(lit.lang.as_deref()));
            }
        }
    }
    for (id, name) in kb.names() {
        put_u32(&mut body, table.intern(id.as_str()));
        put_u32(&mut body, table.intern(name));
    }
    let mut alias_count = 0u64;
    for (surface, ids) in kb.aliases() {
        for id in ids {
            put_u32(&mut body, table.intern(surface));
            put_u32(&mut body, table.intern(id.as_str()));
            alias_count += 1;
        }
    }
    for id in kb.cvt_markers() {
        put_u32(&mut body, table.intern(id.as_str()));
    }

    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for n in [
        table.strings.len() as u64,
        kb.triples().len() as u64,
        kb.names().len() as u64,
        alias_count,
        kb.cvt_markers().len() as u64,
    ] {
        w.write_all(&n.to_le_bytes())?;
    }
    for s in &table.strings {
        w.write_all(&(s.len() as u32).to_le_bytes())?;
        w.write_all(s.as_bytes())?;
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<KnowledgeBase, KbError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(KbError::Snapshot("bad magic".into()));
    }
    let version = get_u32(&mut r)?;
    if version != VERSION {
        return Err(KbError::Snapshot(format!("unsupported version {version}")));
    }
    let mut counts = [0u64; 5];
    for c in counts.iter_mut() {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        *c = u64::from_le_bytes(b);
    }
    let [n_strings, n_triples, n_names, n_aliases, n_cvt] = counts;

    let mut strings = Vec::with_capacity(n_strings.min(1 << 20) as usize);
    for _ in 0..n_strings {
        let len = get_u32(&mut r)? as usize;
        let mut b = vec![0u8; len];
        r.read_exact(&mut b)?;
        strings.push(String::from_utf8(b).map_err(|e| KbError::Snapshot(e.to_string()))?);
    }
    let s = |i: u32| -> Result<&str, KbError> {
        strings
            .get(i as usize)
            .map(String::as_str)
            .ok_or_else(|| KbError::Snapshot(format!("string index {i} out of range")))
    };
    let opt = |i: u32| -> Result<Option<String>, KbError> {
        if i == NONE {
            Ok(None)
        } else {
            s(i).map(|x| Some(x.to_string()))
        }
    };

    let mut triples = Vec::with_capacity(n_triples.min(1 << 24) as usize);
    for _ in 0..n_triples {
        let head = KbId::new(s(get_u32(&mut r)?)?);
        let relation = Relation::new(s(get_u32(&mut r)?)?);
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let tail = match tag[0] {
            0 => KbObject::entity(s(get_u32(&mut r)?)?),
            1 => {
                let text = s(get_u32(&mut r)?)?.to_string();
                let datatype = opt(get_u32(&mut r)?)?;
                let lang = opt(get_u32(&mut r)?)?;
                KbObject::Literal(Literal { text, datatype, lang })
            }
            other => return Err(KbError::Snapshot(format!("bad tail tag {other}"))),
        };
        triples.push(Triple { head, relation, tail });
    }
    let mut names = BTreeMap::new();
    for _ in 0..n_names {
        let id = KbId::new(s(get_u32(&mut r)?)?);
        names.insert(id, s(get_u32(&mut r)?)?.to_string());
    }
    let mut aliases: BTreeMap<String, BTreeSet<KbId>> = BTreeMap::new();
    for _ in 0..n_aliases {
        let surface = s(get_u32(&mut r)?)?.to_string();
        let id = KbId::new(s(get_u32(&mut r)?)?);
        aliases.entry(surface).or_default().insert(id);
    }
    let mut cvt = BTreeSet::new();
    for _ in 0..n_cvt {
        cvt.insert(KbId::new(s(get_u32(&mut r)?)?));
    }
    Ok(KnowledgeBase::from_parts(triples, names, aliases, cvt))
}

/// Reads a snapshot file, or parses an N-Triples file with `filter` when the
/// file does not start with the snapshot magic.
pub fn open_kb(path: impl AsRef<std::path::Path>, filter: &super::PreprocessFilter) -> Result<KnowledgeBase, KbError> {
    let path = path.as_ref();
    let mut head = [0u8; 8];
    let is_snapshot = {
        let mut f = std::fs::File::open(path)?;
        f.read(&mut head)? == 8 && &head == MAGIC
    };
    if is_snapshot {
        read_snapshot(std::io::BufReader::new(std::fs::File::open(path)?))
    } else {
        super::load_ntriples(path, filter).map(|(kb, _)| kb)
    }
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32, KbError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
