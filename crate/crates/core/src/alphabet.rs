//! Interning of event symbols.

use std::cmp::Ordering;
use std::fmt;

use indexmap::IndexSet;

/// Interned event symbol. Two labels are equal iff their strings are equal
/// within one [`Alphabet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub u32);

impl Label {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Bijective table between symbol strings and [`Label`]s.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alphabet {
    symbols: IndexSet<String>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, symbol: &str) -> Label {
        if let Some(i) = self.symbols.get_index_of(symbol) {
            return Label(i as u32);
        }
        let (i, _) = self.symbols.insert_full(symbol.to_owned());
        Label(i as u32)
    }

    pub fn get(&self, symbol: &str) -> Option<Label> {
        self.symbols.get_index_of(symbol).map(|i| Label(i as u32))
    }

    /// Symbol string of `label`. Panics if the label is foreign to this table.
    pub fn name(&self, label: Label) -> &str {
        self.symbols.get_index(label.index()).expect("label belongs to this alphabet")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        (0..self.symbols.len() as u32).map(Label)
    }

    /// Orders labels by their symbol strings.
    pub fn cmp(&self, a: Label, b: Label) -> Ordering {
        self.name(a).cmp(self.name(b))
    }
}
