//! Documents, queries and relevance judgments.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::tokenize::{SimpleTokenizer, Tokenizer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("empty document id")]
    EmptyId,
    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),
    #[error("empty query id")]
    EmptyQueryId,
    #[error("duplicate query id {0:?}")]
    DuplicateQuery(String),
}

/// A retrievable text unit.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Document {
    pub id: String,
    pub title: String,
    pub body: String,
    /// Word tokens in `title + " " + body`.
    pub token_count: usize,
}

impl Document {
    pub fn new(id: impl Into<String>, title: impl Into<String>, body: impl Into<String>) -> Self {
        Self::with_tokenizer(&SimpleTokenizer, id, title, body)
    }

    pub fn with_tokenizer(
        tokenizer: &dyn Tokenizer,
        id: impl Into<String>,
        title: impl Into<String>,
        body: impl Into<String>,
    ) -> Self {
        let mut doc = Document {
            id: id.into(),
            title: title.into(),
            body: body.into(),
            token_count: 0,
        };
        doc.token_count = tokenizer.count(&doc.text());
        doc
    }

    /// Title and body joined by a single space. This is the text that gets
    /// indexed and sent to scorers.
    pub fn text(&self) -> String {
        let mut text = String::with_capacity(self.title.len() + 1 + self.body.len());
        text.push_str(&self.title);
        text.push(' ');
        text.push_str(&self.body);
        text
    }
}

/// Documents in ingest order, addressable by id.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::new();
        for doc in docs {
            corpus.push(doc)?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, doc: Document) -> Result<(), CorpusError> {
        if doc.id.is_empty() {
            return Err(CorpusError::EmptyId);
        }
        if self.by_id.contains_key(&doc.id) {
            return Err(CorpusError::DuplicateDocument(doc.id));
        }
        self.by_id.insert(doc.id.clone(), self.docs.len());
        self.docs.push(doc);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.by_id.get(id).map(|&i| &self.docs[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Document> {
        self.docs.iter()
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Document;
    type IntoIter = core::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.docs.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Query {
    pub id: String,
    pub text: String,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Query {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// Queries in file order with unique ids.
#[derive(Debug, Clone, Default)]
pub struct QuerySet {
    queries: Vec<Query>,
    by_id: BTreeMap<String, usize>,
}

impl QuerySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_queries(queries: impl IntoIterator<Item = Query>) -> Result<Self, CorpusError> {
        let mut set = QuerySet::new();
        for q in queries {
            set.push(q)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, query: Query) -> Result<(), CorpusError> {
        if query.id.is_empty() {
            return Err(CorpusError::EmptyQueryId);
        }
        if self.by_id.contains_key(&query.id) {
            return Err(CorpusError::DuplicateQuery(query.id));
        }
        self.by_id.insert(query.id.clone(), self.queries.len());
        self.queries.push(query);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Query> {
        self.by_id.get(id).map(|&i| &self.queries[i])
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Query> {
        self.queries.iter()
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }
}

/// Graded relevance judgments keyed by query id, then document id.
///
/// Grade 0 entries are kept: they are explicit negatives.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

/// Qrels entries that do not resolve against a query set or corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QrelsCoverage {
    pub unknown_queries: Vec<String>,
    pub unknown_docs: Vec<(String, String)>,
}

impl QrelsCoverage {
    pub fn is_complete(&self) -> bool {
        self.unknown_queries.is_empty() && self.unknown_docs.is_empty()
    }
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the grade of `(query_id, doc_id)`, returning the previous grade.
    pub fn insert(
        &mut self,
        query_id: impl Into<String>,
        doc_id: impl Into<String>,
        grade: u32,
    ) -> Option<u32> {
        self.judgments
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into(), grade)
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(query_id)?.get(doc_id).copied()
    }

    /// Judgments for one query, if any.
    pub fn for_query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    /// True when the query has at least one judgment with grade > 0.
    pub fn has_relevant(&self, query_id: &str) -> bool {
        self.for_query(query_id)
            .is_some_and(|m| m.values().any(|&g| g > 0))
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u32)> {
        self.judgments.iter().flat_map(|(q, docs)| {
            docs.iter().map(move |(d, &g)| (q.as_str(), d.as_str(), g))
        })
    }

    /// Number of (query, document) judgments.
    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reports query ids missing from `queries` and document ids missing
    /// from `corpus`.
    pub fn coverage(&self, queries: &QuerySet, corpus: Option<&Corpus>) -> QrelsCoverage {
        let mut cov = QrelsCoverage::default();
        for (q, docs) in &self.judgments {
            if queries.get(q).is_none() {
                cov.unknown_queries.push(q.clone());
            }
            if let Some(corpus) = corpus {
                for d in docs.keys() {
                    if !corpus.contains(d) {
                        cov.unknown_docs.push((q.clone(), d.clone()));
                    }
                }
            }
        }
        cov
    }
}
