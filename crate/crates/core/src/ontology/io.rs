//! Reading and writing the id-mapped dataset directory layout.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::hash::Hash;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;

use super::{
    ConceptText, Dataset, IdMap, InstanceOfTriple, Labeled, LabeledSplit, RelationalTriple,
    SubClassOfTriple, TrainSplit, Vocabulary,
};
use crate::error::{Error, Result};

pub const INSTANCE_VOCAB: &str = "instance2id.txt";
pub const CONCEPT_VOCAB: &str = "concept2id.txt";
pub const RELATION_VOCAB: &str = "relation2id.txt";
pub const CONCEPT_TEXT: &str = "concept_text.txt";

const SPLITS: [&str; 3] = ["train", "valid", "test"];

fn relational_file(split: &str) -> String {
    format!("triple2id_{split}.txt")
}

fn instance_of_file(split: &str) -> String {
    format!("instanceOf2id_{split}.txt")
}

fn sub_class_of_file(split: &str) -> String {
    format!("subClassOf2id_{split}.txt")
}

/// Expected sizes, as published for the standard benchmark releases.
///
/// Valid/test counts refer to positive triples only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetStats {
    pub instances: usize,
    pub concepts: usize,
    pub relations: usize,
    pub train_relational: usize,
    pub train_instance_of: usize,
    pub train_sub_class_of: usize,
    pub valid_relational: usize,
    pub test_relational: usize,
    pub valid_instance_of: usize,
    pub test_instance_of: usize,
    pub valid_sub_class_of: usize,
    pub test_sub_class_of: usize,
}

impl DatasetStats {
    pub const YAGO39K: DatasetStats = DatasetStats {
        instances: 39_374,
        concepts: 46_110,
        relations: 39,
        train_relational: 354_997,
        train_instance_of: 442_836,
        train_sub_class_of: 30_181,
        valid_relational: 9_341,
        test_relational: 9_364,
        valid_instance_of: 5_000,
        test_instance_of: 5_000,
        valid_sub_class_of: 1_000,
        test_sub_class_of: 1_000,
    };

    pub const M_YAGO39K: DatasetStats = DatasetStats {
        valid_instance_of: 8_650,
        test_instance_of: 8_650,
        valid_sub_class_of: 1_187,
        test_sub_class_of: 1_187,
        ..Self::YAGO39K
    };

    pub const DB99K_242: DatasetStats = DatasetStats {
        instances: 99_744,
        concepts: 242,
        relations: 298,
        train_relational: 592_654,
        train_instance_of: 89_744,
        train_sub_class_of: 111,
        valid_relational: 32_925,
        test_relational: 32_925,
        valid_instance_of: 4_987,
        test_instance_of: 4_987,
        valid_sub_class_of: 13,
        test_sub_class_of: 13,
    };

    pub fn by_name(name: &str) -> Option<DatasetStats> {
        match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "yago39k" => Some(Self::YAGO39K),
            "myago39k" => Some(Self::M_YAGO39K),
            "db99k242" => Some(Self::DB99K_242),
            _ => None,
        }
    }

    pub fn of(dataset: &Dataset) -> DatasetStats {
        let v = &dataset.vocabulary;
        DatasetStats {
            instances: v.num_instances(),
            concepts: v.num_concepts(),
            relations: v.num_relations(),
            train_relational: dataset.train.relational.len(),
            train_instance_of: dataset.train.instance_of.len(),
            train_sub_class_of: dataset.train.sub_class_of.len(),
            valid_relational: dataset.valid.positive_relational().count(),
            test_relational: dataset.test.positive_relational().count(),
            valid_instance_of: dataset.valid.positive_instance_of().count(),
            test_instance_of: dataset.test.positive_instance_of().count(),
            valid_sub_class_of: dataset.valid.positive_sub_class_of().count(),
            test_sub_class_of: dataset.test.positive_sub_class_of().count(),
        }
    }

    fn fields(&self) -> [(&'static str, usize); 12] {
        [
            ("instances", self.instances),
            ("concepts", self.concepts),
            ("relations", self.relations),
            ("train relational", self.train_relational),
            ("train instanceOf", self.train_instance_of),
            ("train subClassOf", self.train_sub_class_of),
            ("valid relational", self.valid_relational),
            ("test relational", self.test_relational),
            ("valid instanceOf", self.valid_instance_of),
            ("test instanceOf", self.test_instance_of),
            ("valid subClassOf", self.valid_sub_class_of),
            ("test subClassOf", self.test_sub_class_of),
        ]
    }

    pub fn check(&self, found: &DatasetStats) -> Result<()> {
        for ((what, expected), (_, got)) in self.fields().into_iter().zip(found.fields()) {
            if expected != got {
                return Err(Error::CountMismatch {
                    what: what.to_string(),
                    expected,
                    found: got,
                });
            }
        }
        Ok(())
    }
}

struct Lines {
    file: String,
    content: String,
}

impl Lines {
    fn read(dir: &Path, name: &str) -> Result<Self> {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        let content = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            file: name.to_string(),
            content,
        })
    }

    /// Non-blank lines with 1-based line numbers.
    fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.content
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty())
    }

    fn malformed(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Malformed {
            file: self.file.clone(),
            line,
            msg: msg.into(),
        }
    }
}

fn read_vocab(dir: &Path, name: &str) -> Result<IdMap> {
    let lines = Lines::read(dir, name)?;
    let mut it = lines.iter();
    let (ln, header) = it
        .next()
        .ok_or_else(|| lines.malformed(1, "missing count line"))?;
    let count: usize = header
        .trim()
        .parse()
        .map_err(|_| lines.malformed(ln, "count line is not an integer"))?;

    let mut slots: Vec<Option<String>> = vec![None; count];
    let mut seen_names = HashSet::new();
    let mut rows = 0;
    for (ln, line) in it {
        let (raw_name, raw_id) = line
            .rsplit_once('\t')
            .or_else(|| line.trim_end().rsplit_once(char::is_whitespace))
            .ok_or_else(|| lines.malformed(ln, "expected \"name<TAB>id\""))?;
        let id: usize = raw_id
            .trim()
            .parse()
            .map_err(|_| lines.malformed(ln, format!("bad id {raw_id:?}")))?;
        if id >= count {
            return Err(Error::IdOutOfRange {
                file: lines.file.clone(),
                line: ln,
                kind: "vocabulary",
                id,
                size: count,
            });
        }
        if slots[id].is_some() {
            return Err(Error::Duplicate {
                file: lines.file.clone(),
                what: "id",
                value: id.to_string(),
            });
        }
        if !seen_names.insert(raw_name.to_string()) {
            return Err(Error::Duplicate {
                file: lines.file.clone(),
                what: "name",
                value: raw_name.to_string(),
            });
        }
        slots[id] = Some(raw_name.to_string());
        rows += 1;
    }
    if rows != count {
        return Err(Error::CountMismatch {
            what: format!("{name} rows"),
            expected: count,
            found: rows,
        });
    }
    Ok(IdMap::from_names(slots.into_iter().map(|s| s.unwrap_or_default()))
        .expect("names checked unique"))
}

struct Parsed {
    ids: Vec<usize>,
    label: Option<bool>,
}

/// Parses id-triple files. `arity` is the number of id columns; an optional
/// trailing 0/1 label is accepted when `labeled` is set. A lone integer on
/// the first line is treated as a row-count header.
fn read_rows(
    dir: &Path,
    name: &str,
    arity: usize,
    labeled: bool,
    bounds: &[(&'static str, usize)],
) -> Result<Vec<Parsed>> {
    let lines = Lines::read(dir, name)?;
    let mut out = Vec::new();
    let mut header: Option<usize> = None;
    for (idx, (ln, line)) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if idx == 0 && fields.len() == 1 {
            header = Some(
                fields[0]
                    .parse()
                    .map_err(|_| lines.malformed(ln, "bad count header"))?,
            );
            continue;
        }
        let with_label = labeled && fields.len() == arity + 1;
        if fields.len() != arity && !with_label {
            return Err(lines.malformed(
                ln,
                format!("expected {arity} fields, found {}", fields.len()),
            ));
        }
        let mut ids = Vec::with_capacity(arity);
        for (k, f) in fields[..arity].iter().enumerate() {
            let id: usize = f
                .parse()
                .map_err(|_| lines.malformed(ln, format!("bad id {f:?}")))?;
            let (kind, size) = bounds[k];
            if id >= size {
                return Err(Error::IdOutOfRange {
                    file: lines.file.clone(),
                    line: ln,
                    kind,
                    id,
                    size,
                });
            }
            ids.push(id);
        }
        let label = if with_label {
            match fields[arity] {
                "1" => Some(true),
                "0" => Some(false),
                other => return Err(lines.malformed(ln, format!("bad label {other:?}"))),
            }
        } else {
            None
        };
        out.push(Parsed { ids, label });
    }
    if let Some(n) = header {
        if n != out.len() {
            return Err(Error::CountMismatch {
                what: format!("{name} rows"),
                expected: n,
                found: out.len(),
            });
        }
    }
    Ok(out)
}

fn dedup_train<T: Copy + Eq + Hash>(items: Vec<T>, file: &str) -> Vec<T> {
    let mut seen = HashSet::with_capacity(items.len());
    let before = items.len();
    let out: Vec<T> = items.into_iter().filter(|t| seen.insert(*t)).collect();
    if out.len() != before {
        warn!("{file}: dropped {} duplicate triples", before - out.len());
    }
    out
}

fn check_disjoint<T: Copy + Eq + Hash + std::fmt::Display>(
    kind: &'static str,
    train: &[T],
    valid: impl Iterator<Item = T>,
    test: impl Iterator<Item = T>,
) -> Result<()> {
    let mut owner: HashMap<T, &'static str> = train.iter().map(|t| (*t, "train")).collect();
    for (split, items) in [
        ("valid", valid.collect::<Vec<_>>()),
        ("test", test.collect::<Vec<_>>()),
    ] {
        let mut local = HashSet::new();
        for t in items {
            if !local.insert(t) {
                continue;
            }
            if let Some(first) = owner.insert(t, split) {
                return Err(Error::SplitOverlap {
                    kind,
                    triple: t.to_string(),
                    first,
                    second: split,
                });
            }
        }
    }
    Ok(())
}

fn read_concept_texts(dir: &Path, n_concepts: usize) -> Result<Vec<ConceptText>> {
    if !dir.join(CONCEPT_TEXT).is_file() {
        return Ok(Vec::new());
    }
    let lines = Lines::read(dir, CONCEPT_TEXT)?;
    let mut out = Vec::new();
    for (ln, line) in lines.iter() {
        let mut parts = line.splitn(3, '\t');
        let raw_id = parts.next().unwrap_or_default();
        let concept: usize = raw_id
            .trim()
            .parse()
            .map_err(|_| lines.malformed(ln, format!("bad concept id {raw_id:?}")))?;
        if concept >= n_concepts {
            return Err(Error::IdOutOfRange {
                file: lines.file.clone(),
                line: ln,
                kind: "concept",
                id: concept,
                size: n_concepts,
            });
        }
        let name = parts
            .next()
            .filter(|n| !n.is_empty())
            .ok_or_else(|| lines.malformed(ln, "missing concept name"))?
            .to_string();
        let description = parts.next().filter(|d| !d.is_empty()).map(str::to_string);
        out.push(ConceptText {
            concept,
            name,
            description,
        });
    }
    Ok(out)
}

/// Loads a dataset directory, enforcing id ranges, uniqueness and split
/// disjointness. Optionally checks the counts against `expect_stats`.
pub fn load_dataset(dir: impl AsRef<Path>, expect_stats: Option<&DatasetStats>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let vocabulary = Vocabulary {
        instances: read_vocab(dir, INSTANCE_VOCAB)?,
        concepts: read_vocab(dir, CONCEPT_VOCAB)?,
        relations: read_vocab(dir, RELATION_VOCAB)?,
    };
    let ni = ("instance", vocabulary.num_instances());
    let nc = ("concept", vocabulary.num_concepts());
    let nr = ("relation", vocabulary.num_relations());

    let mut train = TrainSplit::default();
    let mut valid = LabeledSplit::default();
    let mut test = LabeledSplit::default();

    for split in SPLITS {
        let labeled = split != "train";

        let rel_name = relational_file(split);
        let rel: Vec<(RelationalTriple, bool)> =
            read_rows(dir, &rel_name, 3, labeled, &[ni, ni, nr])?
                .into_iter()
                .map(|p| {
                    (
                        RelationalTriple::new(p.ids[0], p.ids[2], p.ids[1]),
                        p.label.unwrap_or(true),
                    )
                })
                .collect();

        let ins_name = instance_of_file(split);
        let ins: Vec<(InstanceOfTriple, bool)> = read_rows(dir, &ins_name, 2, labeled, &[ni, nc])?
            .into_iter()
            .map(|p| (InstanceOfTriple::new(p.ids[0], p.ids[1]), p.label.unwrap_or(true)))
            .collect();

        let sub_name = sub_class_of_file(split);
        let sub: Vec<(SubClassOfTriple, bool)> = read_rows(dir, &sub_name, 2, labeled, &[nc, nc])?
            .into_iter()
            .map(|p| (SubClassOfTriple::new(p.ids[0], p.ids[1]), p.label.unwrap_or(true)))
            .collect();

        if labeled {
            let target = if split == "valid" { &mut valid } else { &mut test };
            target.relational = rel
                .into_iter()
                .map(|(triple, label)| Labeled { triple, label })
                .collect();
            target.instance_of = ins
                .into_iter()
                .map(|(triple, label)| Labeled { triple, label })
                .collect();
            target.sub_class_of = sub
                .into_iter()
                .map(|(triple, label)| Labeled { triple, label })
                .collect();
        } else {
            train.relational = dedup_train(rel.into_iter().map(|(t, _)| t).collect(), &rel_name);
            train.instance_of = dedup_train(ins.into_iter().map(|(t, _)| t).collect(), &ins_name);
            let subs: Vec<SubClassOfTriple> = sub.into_iter().map(|(t, _)| t).collect();
            let before = subs.len();
            let subs: Vec<_> = subs.into_iter().filter(|t| t.sub != t.sup).collect();
            if subs.len() != before {
                warn!(
                    "{sub_name}: rejected {} reflexive subClassOf triples",
                    before - subs.len()
                );
            }
            train.sub_class_of = dedup_train(subs, &sub_name);
        }
    }

    check_disjoint(
        "relational",
        &train.relational,
        valid.positive_relational(),
        test.positive_relational(),
    )?;
    check_disjoint(
        "instanceOf",
        &train.instance_of,
        valid.positive_instance_of(),
        test.positive_instance_of(),
    )?;
    check_disjoint(
        "subClassOf",
        &train.sub_class_of,
        valid.positive_sub_class_of(),
        test.positive_sub_class_of(),
    )?;

    let concept_texts = read_concept_texts(dir, vocabulary.num_concepts())?;
    let dataset = Dataset {
        vocabulary,
        train,
        valid,
        test,
        concept_texts,
    };
    if let Some(expected) = expect_stats {
        expected.check(&DatasetStats::of(&dataset))?;
    }
    Ok(dataset)
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))
}

fn write_vocab(dir: &Path, name: &str, map: &IdMap) -> Result<()> {
    write_file(dir, name, |w| {
        writeln!(w, "{}", map.len())?;
        for (id, n) in map.names().iter().enumerate() {
            writeln!(w, "{n}\t{id}")?;
        }
        Ok(())
    })
}

fn label_suffix(label: bool) -> &'static str {
    if label {
        "1"
    } else {
        "0"
    }
}

/// Writes the dataset in the same layout [`load_dataset`] reads.
pub fn save_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let v = &dataset.vocabulary;
    write_vocab(dir, INSTANCE_VOCAB, &v.instances)?;
    write_vocab(dir, CONCEPT_VOCAB, &v.concepts)?;
    write_vocab(dir, RELATION_VOCAB, &v.relations)?;

    let t = &dataset.train;
    write_file(dir, &relational_file("train"), |w| {
        for x in &t.relational {
            writeln!(w, "{} {} {}", x.head, x.tail, x.relation)?;
        }
        Ok(())
    })?;
    write_file(dir, &instance_of_file("train"), |w| {
        for x in &t.instance_of {
            writeln!(w, "{} {}", x.instance, x.concept)?;
        }
        Ok(())
    })?;
    write_file(dir, &sub_class_of_file("train"), |w| {
        for x in &t.sub_class_of {
            writeln!(w, "{} {}", x.sub, x.sup)?;
        }
        Ok(())
    })?;

    for (split, data) in [("valid", &dataset.valid), ("test", &dataset.test)] {
        write_file(dir, &relational_file(split), |w| {
            for l in &data.relational {
                let x = l.triple;
                writeln!(w, "{} {} {} {}", x.head, x.tail, x.relation, label_suffix(l.label))?;
            }
            Ok(())
        })?;
        write_file(dir, &instance_of_file(split), |w| {
            for l in &data.instance_of {
                let x = l.triple;
                writeln!(w, "{} {} {}", x.instance, x.concept, label_suffix(l.label))?;
            }
            Ok(())
        })?;
        write_file(dir, &sub_class_of_file(split), |w| {
            for l in &data.sub_class_of {
                let x = l.triple;
                writeln!(w, "{} {} {}", x.sub, x.sup, label_suffix(l.label))?;
            }
            Ok(())
        })?;
    }

    if !dataset.concept_texts.is_empty() {
        write_file(dir, CONCEPT_TEXT, |w| {
            for c in &dataset.concept_texts {
                writeln!(
                    w,
                    "{}\t{}\t{}",
                    c.concept,
                    c.name,
                    c.description.as_deref().unwrap_or("")
                )?;
            }
            Ok(())
        })?;
    }
    Ok(())
}
