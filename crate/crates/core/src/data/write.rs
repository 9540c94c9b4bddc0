use super::{AttributeTable, FormatConfig, Result, SessionSet, Vocabulary};
use std::io;

fn writer<W: io::Write>(output: W, format: &FormatConfig) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .delimiter(format.delimiter)
        .from_writer(output)
}

/// Writes `set` in the layout [`super::parse_sessions`] reads, one row per
/// interaction in session order.
pub fn write_sessions<W: io::Write>(
    set: &SessionSet,
    output: W,
    format: &FormatConfig,
) -> Result<()> {
    let mut w = writer(output, format);
    w.write_record([
        &format.session_column,
        &format.item_column,
        &format.time_column,
    ])?;
    for s in &set.sessions {
        for (&item, &time) in s.items.iter().zip(&s.times) {
            let id = set.vocab.id(item).expect("index within vocabulary");
            w.write_record([s.id.as_str(), id, &time.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one `(item, attribute, value)` row per assigned value, items in
/// vocabulary order.
pub fn write_attributes<W: io::Write>(
    table: &AttributeTable,
    vocab: &Vocabulary,
    output: W,
    format: &FormatConfig,
) -> Result<()> {
    let mut w = writer(output, format);
    w.write_record([
        &format.item_column,
        &format.attribute_column,
        &format.value_column,
    ])?;
    for (i, id) in vocab.iter().enumerate() {
        for attr in &table.attributes {
            for &v in attr.of(i) {
                w.write_record([id, attr.name.as_str(), attr.values[v].as_str()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
