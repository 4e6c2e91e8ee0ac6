use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;

const BUNDLED_TASKS: &str = include_str!("../../data/tasks.json");

pub const CATEGORIES: [&str; 5] = ["creation", "game", "education", "work", "life"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub category: String,
    pub task: String,
}

pub fn builtin_tasks() -> Vec<Task> {
    serde_json::from_str(BUNDLED_TASKS).expect("bundled tasks are valid")
}

pub fn load_tasks(path: Option<&Path>) -> Result<Vec<Task>, HarnessError> {
    let tasks = match path {
        None => builtin_tasks(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
        }
    };
    if tasks.is_empty() {
        return Err(HarnessError::Config("task list is empty".into()));
    }
    Ok(tasks)
}

/// Tasks of one category, in list order.
pub fn in_category<'a>(tasks: &'a [Task], category: &str) -> Vec<&'a Task> {
    tasks.iter().filter(|t| t.category == category).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_list_covers_every_category() {
        let tasks = builtin_tasks();
        assert_eq!(tasks.len(), 25);
        for c in CATEGORIES {
            assert_eq!(in_category(&tasks, c).len(), 5, "{c}");
        }
        assert!(tasks.iter().any(|t| t.task == "Develop a tetris game."));
    }
}
