use std::collections::{BTreeMap, HashMap};

use super::{ConversationRecord, Split, ThreadNode};
use crate::error::{Error, Result};

/// Expands a thread tree into one conversation per non-root node: the
/// root-to-node path, with the node's text as the response and its author as
/// the respondent. Output follows the input order of the non-root nodes.
/// Texts are left as-is; filtering happens later.
pub fn flatten_thread(nodes: &[ThreadNode], domain: &str) -> Result<Vec<ConversationRecord>> {
    let malformed = |thread: &str, reason: String| Error::MalformedThread { thread: thread.to_string(), reason };
    let first = nodes.first().map_or("<empty>", |n| n.id.as_str());
    let mut by_id: HashMap<&str, &ThreadNode> = HashMap::with_capacity(nodes.len());
    for n in nodes {
        if by_id.insert(n.id.as_str(), n).is_some() {
            return Err(malformed(first, format!("duplicate node id {}", n.id)));
        }
    }
    let roots: Vec<&ThreadNode> = nodes.iter().filter(|n| n.parent_id.is_none()).collect();
    let root = match roots.as_slice() {
        [r] => *r,
        [] => return Err(malformed(first, "no root node".into())),
        _ => return Err(malformed(first, format!("{} root nodes", roots.len()))),
    };
    let thread_id = root.id.clone();

    let mut out = Vec::with_capacity(nodes.len().saturating_sub(1));
    for node in nodes.iter().filter(|n| n.parent_id.is_some()) {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(pid) = &cur.parent_id {
            let parent = by_id
                .get(pid.as_str())
                .ok_or_else(|| malformed(&thread_id, format!("node {} has unknown parent {pid}", cur.id)))?;
            if parent.created_utc > cur.created_utc {
                return Err(malformed(&thread_id, format!("node {} predates its parent {pid}", cur.id)));
            }
            if path.len() > nodes.len() {
                return Err(malformed(&thread_id, format!("cycle through node {}", node.id)));
            }
            path.push(parent);
            cur = parent;
        }
        if cur.id != root.id {
            return Err(malformed(&thread_id, format!("node {} does not reach the root", node.id)));
        }
        path.reverse();
        let (last, ctx) = path.split_last().expect("path has the node itself");
        out.push(ConversationRecord {
            id: format!("{thread_id}/{}", node.id),
            thread_id: thread_id.clone(),
            domain: domain.to_string(),
            context: ctx.iter().map(|n| n.body.clone()).collect(),
            context_speakers: ctx.iter().map(|n| n.author.clone()).collect(),
            persona: Vec::new(),
            response: last.body.clone(),
            respondent: last.author.clone(),
            split: Split::Train,
        });
    }
    Ok(out)
}

/// Groups a flat node list into threads by following parent links to the
/// topmost reachable ancestor. Groups are keyed by that ancestor's id; a group
/// whose top node is not a root is returned as-is and rejected by
/// [`flatten_thread`]. Node order within a group follows the input.
pub fn group_threads(nodes: Vec<ThreadNode>) -> BTreeMap<String, Vec<ThreadNode>> {
    let parent: HashMap<String, Option<String>> =
        nodes.iter().map(|n| (n.id.clone(), n.parent_id.clone())).collect();
    let top = |id: &str| -> String {
        let mut cur = id.to_string();
        for _ in 0..=parent.len() {
            match parent.get(&cur) {
                Some(Some(p)) if parent.contains_key(p) => cur = p.clone(),
                Some(Some(p)) => return p.clone(),
                _ => return cur,
            }
        }
        cur
    };
    let mut groups: BTreeMap<String, Vec<ThreadNode>> = BTreeMap::new();
    for n in nodes {
        let key = top(&n.id);
        groups.entry(key).or_default().push(n);
    }
    groups
}
