use super::{column, record_line, DataError, FormatConfig, Result, Vocabulary};
use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};
use std::io;

/// One item attribute: its value vocabulary and the (possibly empty,
/// possibly multi-valued) value set of every item.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub values: IndexSet<String>,
    /// Indexed by item; value indices in first-appearance order, no repeats.
    pub item_values: Vec<Vec<usize>>,
}

impl Attribute {
    pub fn new(name: impl Into<String>, num_items: usize) -> Self {
        Attribute {
            name: name.into(),
            values: IndexSet::new(),
            item_values: vec![Vec::new(); num_items],
        }
    }

    pub fn num_values(&self) -> usize {
        self.values.len()
    }

    /// The value set of `item`; empty for unknown items.
    pub fn of(&self, item: usize) -> &[usize] {
        self.item_values.get(item).map_or(&[], Vec::as_slice)
    }

    /// Adds `value` to the value set of `item`.
    pub fn assign(&mut self, item: usize, value: &str) {
        let v = match self.values.get_index_of(value) {
            Some(v) => v,
            None => self.values.insert_full(value.to_string()).0,
        };
        let set = &mut self.item_values[item];
        if !set.contains(&v) {
            set.push(v);
        }
    }
}

/// Attribute assignments for every item in a vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttributeTable {
    pub num_items: usize,
    pub attributes: Vec<Attribute>,
}

impl AttributeTable {
    pub fn empty(num_items: usize) -> Self {
        AttributeTable {
            num_items,
            attributes: Vec::new(),
        }
    }

    /// Number of attributes.
    pub fn k(&self) -> usize {
        self.attributes.len()
    }

    pub fn get(&self, j: usize) -> Result<&Attribute> {
        self.attributes.get(j).ok_or(DataError::UnknownAttribute {
            index: j,
            count: self.attributes.len(),
        })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    /// A table restricted to `names`, in the given order.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<AttributeTable> {
        let attributes = names
            .iter()
            .map(|n| {
                let n = n.as_ref();
                self.index_of(n)
                    .map(|j| self.attributes[j].clone())
                    .ok_or_else(|| DataError::UnknownAttributeName(n.to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(AttributeTable {
            num_items: self.num_items,
            attributes,
        })
    }

    /// Re-keys the table from `from` item indices to `to` item indices.
    /// Items missing from `from` get empty value sets.
    pub fn reindex(&self, from: &Vocabulary, to: &Vocabulary) -> AttributeTable {
        let attributes = self
            .attributes
            .iter()
            .map(|a| {
                let mut out = Attribute::new(a.name.clone(), to.len());
                for (j, id) in to.iter().enumerate() {
                    if let Some(i) = from.index_of(id) {
                        for &v in a.of(i) {
                            out.assign(j, &a.values[v]);
                        }
                    }
                }
                out
            })
            .collect();
        AttributeTable {
            num_items: to.len(),
            attributes,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedAttributes {
    pub table: AttributeTable,
    /// Rows skipped because their item is not in the vocabulary.
    pub skipped_rows: usize,
}

/// Reads `(item, attribute, value)` rows for the items of `vocab`.
///
/// Multi-valued attributes use one row per value. Attributes are ordered
/// by first appearance. Rows naming items outside `vocab` are skipped and
/// counted.
pub fn parse_attributes<R: io::Read>(
    input: R,
    format: &FormatConfig,
    vocab: &Vocabulary,
) -> Result<ParsedAttributes> {
    let mut reader = format.reader(input);
    let headers = reader.headers()?.clone();
    let mut table = AttributeTable::empty(vocab.len());
    if headers.is_empty() {
        return Ok(ParsedAttributes {
            table,
            skipped_rows: 0,
        });
    }
    let ic = column(&headers, &format.item_column)?;
    let ac = column(&headers, &format.attribute_column)?;
    let vc = column(&headers, &format.value_column)?;

    let mut by_name: IndexMap<String, Attribute> = IndexMap::new();
    let mut skipped_rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| match e.position() {
            Some(p) => DataError::Malformed {
                line: p.line(),
                message: e.to_string(),
            },
            None => DataError::Csv(e),
        })?;
        let line = record_line(&record);
        let field = |c: usize, what: &str| {
            record
                .get(c)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| DataError::Malformed {
                    line,
                    message: format!("missing {what}"),
                })
        };
        let item = field(ic, &format.item_column)?;
        let name = field(ac, &format.attribute_column)?;
        let value = field(vc, &format.value_column)?;
        let Some(i) = vocab.index_of(item) else {
            skipped_rows += 1;
            continue;
        };
        by_name
            .entry(name.to_string())
            .or_insert_with(|| Attribute::new(name, vocab.len()))
            .assign(i, value);
    }
    if skipped_rows > 0 {
        log::warn!("skipped {skipped_rows} attribute rows for items outside the vocabulary");
    }
    table.attributes = by_name.into_values().collect();
    Ok(ParsedAttributes {
        table,
        skipped_rows,
    })
}
