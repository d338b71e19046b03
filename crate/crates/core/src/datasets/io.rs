//! Scene feature files.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes  "RGSCENE\0"
//! version    u32      = 1
//! dim        u32
//! count      u64      number of scene records
//! provenance u32 length + UTF-8 bytes
//! groups     u32
//!   per group: name (u32 length + UTF-8), u32 value count, value names
//! per scene:
//!   scene id        u64
//!   split           u8   (0 unassigned, 1 train, 2 test)
//!   referent id     u64
//!   context id      u64
//!   referent values u32 count (0 = unknown, else one per group) + u32 each
//!   context values  same
//!   referent        dim x f32
//!   context         dim x f32
//!   gold            u32 count + u32 attribute indices
//! ```
//!
//! Features are stored as `f32`; values with more precision are rounded on
//! save.
//!
//! The text sibling is meant for hand-written fixtures. Header lines start
//! with `#`: `# dim <D>`, one `# group <name> <value>...` per group, and an
//! optional `# provenance <text>`. Each other line is one scene with
//! tab-separated columns `id  referent_id  context_id  referent_feature
//! context_feature  gold [split]`, where vectors are space-separated.
//! Per-object attribute values are not represented in text files.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use super::scene::{ObjectId, ObjectSpec, Scene, SceneSet, Split};
use super::schema::{AttributeGroup, AttributeSchema};
use crate::error::{Error, Result};

pub const FEATURE_FILE_MAGIC: &[u8; 8] = b"RGSCENE\0";
pub const FEATURE_FILE_VERSION: u32 = 1;

const MAX_STRING: u32 = 1 << 20;

pub fn save_feature_file(set: &SceneSet, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(Error::file(path))?);
    w.write_all(FEATURE_FILE_MAGIC)?;
    w.write_all(&FEATURE_FILE_VERSION.to_le_bytes())?;
    w.write_all(&(set.dim() as u32).to_le_bytes())?;
    w.write_all(&(set.len() as u64).to_le_bytes())?;
    write_str(&mut w, set.provenance())?;
    let groups = set.schema().groups();
    w.write_all(&(groups.len() as u32).to_le_bytes())?;
    for g in groups {
        write_str(&mut w, &g.name)?;
        w.write_all(&(g.values.len() as u32).to_le_bytes())?;
        for v in &g.values {
            write_str(&mut w, v)?;
        }
    }
    for (scene, split) in set.scenes().iter().zip(set.splits()) {
        w.write_all(&scene.id.to_le_bytes())?;
        w.write_all(&[split.code()])?;
        w.write_all(&scene.referent.id.0.to_le_bytes())?;
        w.write_all(&scene.context.id.0.to_le_bytes())?;
        for obj in [&scene.referent, &scene.context] {
            let values = obj.values.as_deref().unwrap_or(&[]);
            write_indices(&mut w, values)?;
        }
        for obj in [&scene.referent, &scene.context] {
            for &x in &obj.feature {
                w.write_all(&(x as f32).to_le_bytes())?;
            }
        }
        let gold: Vec<usize> = scene.gold.iter().copied().collect();
        write_indices(&mut w, &gold)?;
    }
    w.flush()?;
    Ok(())
}

fn write_str(w: &mut impl Write, s: &str) -> Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn write_indices(w: &mut impl Write, values: &[usize]) -> Result<()> {
    w.write_all(&(values.len() as u32).to_le_bytes())?;
    for &v in values {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    Ok(())
}

/// Loads a binary feature file, or a text fixture when the magic is absent.
pub fn load_feature_file(path: &Path) -> Result<SceneSet> {
    let mut file = BufReader::new(File::open(path).map_err(Error::file(path))?);
    let head = file.fill_buf()?;
    if head.len() >= 8 && &head[..8] == FEATURE_FILE_MAGIC {
        BinaryReader { inner: file, path, record: 0 }.read()
    } else if head.iter().take(64).any(|&b| b == 0) {
        Err(Error::format(path, 0, "not a feature file: unrecognized magic"))
    } else {
        load_text(path, file)
    }
}

struct BinaryReader<'p, R> {
    inner: R,
    path: &'p Path,
    record: usize,
}

impl<R: Read> BinaryReader<'_, R> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(self.path, self.record, msg)
    }

    fn bytes<const N: usize>(&mut self) -> std::io::Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf)?;
        Ok(buf)
    }

    fn u8(&mut self) -> std::io::Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> std::io::Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> std::io::Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32().map_err(|e| self.io(e, "string length"))?;
        if len > MAX_STRING {
            return Err(self.err(format!("string length {len} exceeds limit")));
        }
        let mut buf = vec![0u8; len as usize];
        self.inner.read_exact(&mut buf).map_err(|e| self.io(e, "string"))?;
        String::from_utf8(buf).map_err(|_| self.err("string is not valid UTF-8"))
    }

    fn io(&self, e: std::io::Error, what: &str) -> Error {
        if e.kind() == ErrorKind::UnexpectedEof {
            self.err(format!("unexpected end of file while reading {what}"))
        } else {
            Error::Io(e)
        }
    }

    fn header(&mut self) -> Result<(usize, u64, String, AttributeSchema)> {
        let magic = self.bytes::<8>().map_err(|e| self.io(e, "magic"))?;
        if &magic != FEATURE_FILE_MAGIC {
            return Err(self.err("bad magic"));
        }
        let version = self.u32().map_err(|e| self.io(e, "version"))?;
        if version != FEATURE_FILE_VERSION {
            return Err(self.err(format!("unsupported version {version}")));
        }
        let dim = self.u32().map_err(|e| self.io(e, "dim"))? as usize;
        if dim == 0 {
            return Err(self.err("dim must be positive"));
        }
        let count = self.u64().map_err(|e| self.io(e, "scene count"))?;
        let provenance = self.string()?;
        let n_groups = self.u32().map_err(|e| self.io(e, "group count"))?;
        let mut groups = Vec::with_capacity(n_groups.min(1024) as usize);
        for _ in 0..n_groups {
            let name = self.string()?;
            let n_values = self.u32().map_err(|e| self.io(e, "value count"))?;
            let mut values = Vec::new();
            for _ in 0..n_values {
                values.push(self.string()?);
            }
            groups.push(AttributeGroup { name, values });
        }
        let schema = AttributeSchema::new(groups).map_err(|e| self.err(format!("schema: {e}")))?;
        Ok((dim, count, provenance, schema))
    }

    fn read(mut self) -> Result<SceneSet> {
        let (dim, count, provenance, schema) = self.header()?;
        let total = schema.total();
        let n_groups = schema.group_count();
        let mut scenes = Vec::new();
        let mut splits = Vec::new();
        let mut ids = std::collections::HashSet::new();
        for rec in 0..count {
            self.record = rec as usize + 1;
            let truncated = |me: &Self, e: std::io::Error| -> Error {
                if e.kind() == ErrorKind::UnexpectedEof {
                    me.err(format!("truncated: header declares {count} scenes, found {rec} complete records"))
                } else {
                    Error::Io(e)
                }
            };
            let id = self.u64().map_err(|e| truncated(&self, e))?;
            if !ids.insert(id) {
                return Err(self.err(format!("duplicate scene id {id}")));
            }
            let split_code = self.u8().map_err(|e| truncated(&self, e))?;
            let split = Split::from_code(split_code).ok_or_else(|| self.err(format!("bad split code {split_code}")))?;
            let ref_id = self.u64().map_err(|e| truncated(&self, e))?;
            let ctx_id = self.u64().map_err(|e| truncated(&self, e))?;
            let mut values = [None, None];
            for slot in &mut values {
                let n = self.u32().map_err(|e| truncated(&self, e))? as usize;
                if n == 0 {
                    continue;
                }
                if n != n_groups {
                    return Err(self.err(format!("object has {n} values, schema has {n_groups} groups")));
                }
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    v.push(self.u32().map_err(|e| truncated(&self, e))? as usize);
                }
                schema.validate_values(&v).map_err(|e| self.err(e.to_string()))?;
                *slot = Some(v);
            }
            let mut feats = [Vec::with_capacity(dim), Vec::with_capacity(dim)];
            for f in &mut feats {
                for _ in 0..dim {
                    let x = f32::from_le_bytes(self.bytes().map_err(|e| truncated(&self, e))?);
                    if !x.is_finite() {
                        return Err(self.err("non-finite feature value"));
                    }
                    f.push(f64::from(x));
                }
            }
            let n_gold = self.u32().map_err(|e| truncated(&self, e))? as usize;
            let mut gold = BTreeSet::new();
            for _ in 0..n_gold {
                let g = self.u32().map_err(|e| truncated(&self, e))? as usize;
                if g >= total {
                    return Err(self.err(format!("gold attribute {g} out of range ({total} attributes)")));
                }
                gold.insert(g);
            }
            let [ref_values, ctx_values] = values;
            let [ref_feat, ctx_feat] = feats;
            scenes.push(Scene {
                id,
                referent: ObjectSpec {
                    id: ObjectId(ref_id),
                    values: ref_values,
                    feature: ref_feat,
                },
                context: ObjectSpec {
                    id: ObjectId(ctx_id),
                    values: ctx_values,
                    feature: ctx_feat,
                },
                gold,
            });
            splits.push(split);
        }
        let mut rest = [0u8; 1];
        if self.inner.read(&mut rest)? != 0 {
            self.record = count as usize;
            return Err(self.err(format!("trailing data after {count} declared records")));
        }
        SceneSet::with_splits(schema, dim, scenes, splits, provenance)
    }
}

pub fn save_text_file(set: &SceneSet, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(Error::file(path))?);
    writeln!(w, "# refgame scenes v1")?;
    writeln!(w, "# dim {}", set.dim())?;
    for g in set.schema().groups() {
        writeln!(w, "# group {} {}", g.name, g.values.join(" "))?;
    }
    if !set.provenance().is_empty() {
        writeln!(w, "# provenance {}", set.provenance())?;
    }
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    for (s, split) in set.scenes().iter().zip(set.splits()) {
        let gold: Vec<String> = s.gold.iter().map(|g| g.to_string()).collect();
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.id,
            s.referent.id,
            s.context.id,
            join(&s.referent.feature),
            join(&s.context.feature),
            gold.join(" "),
            split.as_str()
        )?;
    }
    w.flush()?;
    Ok(())
}

fn load_text(path: &Path, reader: impl BufRead) -> Result<SceneSet> {
    let mut dim = None;
    let mut groups = Vec::new();
    let mut provenance = String::new();
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let n = lineno + 1;
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            match parts.next() {
                Some("dim") => {
                    let d = parts
                        .next()
                        .and_then(|d| d.parse::<usize>().ok())
                        .ok_or_else(|| Error::format(path, n, "bad dim header"))?;
                    dim = Some(d);
                }
                Some("group") => {
                    let name = parts.next().ok_or_else(|| Error::format(path, n, "group without name"))?;
                    groups.push(AttributeGroup {
                        name: name.to_string(),
                        values: parts.map(str::to_string).collect(),
                    });
                }
                Some("provenance") => {
                    provenance = rest.trim_start().trim_start_matches("provenance").trim().to_string();
                }
                _ => {}
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        rows.push((n, line));
    }
    let dim = dim.ok_or_else(|| Error::format(path, 0, "missing '# dim' header"))?;
    let schema = AttributeSchema::new(groups).map_err(|e| Error::format(path, 0, format!("schema: {e}")))?;
    let total = schema.total();
    let mut scenes = Vec::with_capacity(rows.len());
    let mut splits = Vec::with_capacity(rows.len());
    let mut ids = std::collections::HashSet::new();
    for (n, line) in rows {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 && cols.len() != 7 {
            return Err(Error::format(path, n, format!("expected 6 or 7 tab-separated columns, found {}", cols.len())));
        }
        let int = |s: &str, what: &str| s.trim().parse::<u64>().map_err(|_| Error::format(path, n, format!("bad {what} {s:?}")));
        let id = int(cols[0], "scene id")?;
        if !ids.insert(id) {
            return Err(Error::format(path, n, format!("duplicate scene id {id}")));
        }
        let feature = |s: &str| -> Result<Vec<f64>> {
            let v: Vec<f64> = s
                .split_whitespace()
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::format(path, n, "bad feature value"))?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::format(path, n, "non-finite feature value"));
            }
            if v.len() != dim {
                return Err(Error::format(path, n, format!("feature has {} values, header dim is {dim}", v.len())));
            }
            Ok(v)
        };
        let gold = cols[5]
            .split_whitespace()
            .map(|g| {
                let g = int(g, "gold index")? as usize;
                if g >= total {
                    return Err(Error::format(path, n, format!("gold attribute {g} out of range")));
                }
                Ok(g)
            })
            .collect::<Result<BTreeSet<usize>>>()?;
        let split = match cols.get(6) {
            None => Split::Unassigned,
            Some(s) => Split::parse(s.trim()).ok_or_else(|| Error::format(path, n, format!("bad split {s:?}")))?,
        };
        scenes.push(Scene {
            id,
            referent: ObjectSpec {
                id: ObjectId(int(cols[1], "referent id")?),
                values: None,
                feature: feature(cols[3])?,
            },
            context: ObjectSpec {
                id: ObjectId(int(cols[2], "context id")?),
                values: None,
                feature: feature(cols[4])?,
            },
            gold,
        });
        splits.push(split);
    }
    SceneSet::with_splits(schema, dim, scenes, splits, provenance)
}
