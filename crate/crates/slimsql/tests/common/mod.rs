//! Shared fixture: three small SQLite databases, twenty benchmark questions
//! with gold SQL, and a scripted model whose replies drive each question to a
//! known, hand-labelled outcome.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rusqlite::Connection;
use serde_json::json;
use slimsql::backend::{ModelRouter, Script, ScriptRule, ScriptedBackend};
use slimsql::core::{ModelRole, PathKind, PipelineConfig, StageKind};

pub const COMPANY: &str = "
CREATE TABLE Departments (department_id INTEGER PRIMARY KEY, department_name TEXT NOT NULL, location TEXT);
CREATE TABLE Employees (
    employee_id INTEGER PRIMARY KEY,
    name TEXT NOT NULL,
    department_id INTEGER REFERENCES Departments(department_id),
    salary REAL,
    hire_year INTEGER
);
INSERT INTO Departments VALUES (1, 'Engineering', 'Berlin'), (2, 'Sales', 'Paris'), (3, 'Support', 'Lisbon');
INSERT INTO Employees VALUES
    (1, 'Alice', 1, 120000.0, 2015), (2, 'Bob', 2, 65000.0, 2018), (3, 'Carol', 1, 98000.0, 2020),
    (4, 'Dan', 3, 45000.0, 2021), (5, 'Eve', 2, 72000.0, 2016), (6, 'Frank', 1, 87000.0, 2019);
";

pub const SHOP: &str = "
CREATE TABLE customer (customer_id INTEGER PRIMARY KEY, name TEXT NOT NULL, city TEXT);
CREATE TABLE products (product_id INTEGER PRIMARY KEY, title TEXT NOT NULL, price REAL);
CREATE TABLE orders (
    order_id INTEGER PRIMARY KEY,
    customer_id INTEGER REFERENCES customer(customer_id),
    product_id INTEGER REFERENCES products(product_id),
    quantity INTEGER,
    order_date TEXT
);
INSERT INTO customer VALUES (1, 'Ann', 'Oslo'), (2, 'Ben', 'Rome'), (3, 'Cid', 'Oslo'), (4, 'Dee', 'Madrid');
INSERT INTO products VALUES (1, 'Lamp', 25.5), (2, 'Desk', 150.0), (3, 'Chair', 75.25);
INSERT INTO orders VALUES
    (1, 1, 1, 2, '2024-01-03'), (2, 1, 3, 1, '2024-02-11'), (3, 2, 2, 1, '2024-02-15'),
    (4, 3, 1, 4, '2024-03-01'), (5, 3, 2, 2, '2024-03-09'), (6, 1, 1, 1, '2024-04-20');
";

pub const SCHOOL: &str = "
CREATE TABLE students (student_id INTEGER PRIMARY KEY, name TEXT NOT NULL, grade INTEGER);
CREATE TABLE courses (course_id INTEGER PRIMARY KEY, title TEXT NOT NULL, credits INTEGER);
CREATE TABLE enrollments (
    student_id INTEGER REFERENCES students(student_id),
    course_id INTEGER REFERENCES courses(course_id),
    score REAL,
    PRIMARY KEY (student_id, course_id)
);
INSERT INTO students VALUES (1, 'Mia', 10), (2, 'Noah', 11), (3, 'Olga', 10), (4, 'Pete', 12);
INSERT INTO courses VALUES (1, 'Algebra', 4), (2, 'Biology', 3), (3, 'Chemistry', 3);
INSERT INTO enrollments VALUES (1, 1, 91.0), (1, 2, 78.5), (2, 1, 66.0), (3, 3, 88.0), (4, 2, 95.5), (4, 3, 70.0);
";

pub const DATABASES: [(&str, &str); 3] = [("company", COMPANY), ("shop", SHOP), ("school", SCHOOL)];

/// Creates `<root>/<db_id>/<db_id>.sqlite` for every fixture database.
pub fn build_databases(root: &Path) {
    for (id, ddl) in DATABASES {
        let dir = root.join(id);
        std::fs::create_dir_all(&dir).unwrap();
        Connection::open(dir.join(format!("{id}.sqlite")))
            .unwrap()
            .execute_batch(ddl)
            .unwrap();
    }
}

pub fn db_path(root: &Path, id: &str) -> PathBuf {
    root.join(id).join(format!("{id}.sqlite"))
}

/// Scripted generations for a question.
pub enum Gen {
    /// The same replies on every path.
    All(&'static [&'static str]),
    /// Replies per path, in `PathKind::ALL` order.
    PerPath([&'static [&'static str]; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    /// The gold query fails, so the question is left out of N.
    Excluded,
    Scored {
        executable: bool,
        correct: bool,
    },
}

pub struct FixtureQuestion {
    pub qid: &'static str,
    pub db: &'static str,
    pub question: &'static str,
    pub hint: Option<&'static str>,
    pub gold: &'static str,
    pub difficulty: &'static str,
    pub pruning: &'static str,
    pub linking: &'static str,
    pub generation: Gen,
    pub correction: &'static [&'static str],
    pub selection: &'static [&'static str],
    pub expect: Expect,
}

const BROKEN: &[&str] = &["SELECT missing_column FROM missing_table"];
const FIRST: &[&str] = &["Index: 1"];
const RECURSIVE: &str = "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT COUNT(*) FROM c";

const fn scored(executable: bool, correct: bool) -> Expect {
    Expect::Scored { executable, correct }
}

pub fn questions() -> Vec<FixtureQuestion> {
    vec![
        FixtureQuestion {
            qid: "q01",
            db: "company",
            question: "What is the salary of the employee named 'Alice'?",
            hint: None,
            gold: "SELECT salary FROM Employees WHERE name = 'Alice'",
            difficulty: "simple",
            pruning: "This table directly contains the columns name and salary.\nThe relevant table is Employees.",
            linking: "The related columns are Employees.name and Employees.salary.",
            generation: Gen::All(&["```sql\nSELECT salary FROM Employees WHERE name = 'Alice'\n```"]),
            correction: BROKEN,
            selection: FIRST,
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q02",
            db: "company",
            question: "How many employees work in the Engineering department?",
            hint: None,
            gold: "SELECT COUNT(*) FROM Employees AS e JOIN Departments AS d ON e.department_id = d.department_id WHERE d.department_name = 'Engineering'",
            difficulty: "moderate",
            pruning: "Both Employees and Departments are needed.",
            linking: "Departments.department_name, Employees.department_id and Departments.department_id.",
            generation: Gen::All(&[
                "```sql\nSELECT COUNT(employee_id) FROM Employees WHERE department_id = (SELECT department_id FROM Departments WHERE department_name = 'Engineering')\n```",
            ]),
            correction: BROKEN,
            selection: FIRST,
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q03",
            db: "company",
            question: "List the names of employees hired after 2018.",
            hint: None,
            gold: "SELECT name FROM Employees WHERE hire_year > 2018",
            difficulty: "simple",
            pruning: "The relevant table is Employees.",
            linking: "Employees.name and Employees.hire_year",
            generation: Gen::All(&["SELECT name FROM Employees WHERE hire_year >= 2018"]),
            correction: BROKEN,
            selection: FIRST,
            expect: scored(true, false),
        },
        FixtureQuestion {
            qid: "q04",
            db: "company",
            question: "What is the average salary in the Sales department?",
            hint: Some("Sales has department_id 2."),
            gold: "SELECT AVG(e.salary) FROM Employees e JOIN Departments d ON e.department_id = d.department_id WHERE d.department_name = 'Sales'",
            difficulty: "moderate",
            pruning: "The relevant table is Employees.",
            linking: "Employees.salary, Employees.department_id",
            generation: Gen::All(&["```sql\nSELECT AVG(wage) FROM Employees WHERE department_id = 2\n```"]),
            correction: &[
                "```sql\nSELECT AVG(salary) FROM Employees WHERE department_id = 2\n```",
                "SELECT AVG(salary) FROM Employees WHERE department_id = 2;",
            ],
            selection: FIRST,
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q05",
            db: "company",
            question: "Which department has the highest total salary?",
            hint: None,
            gold: "SELECT d.department_name FROM Departments d JOIN Employees e ON e.department_id = d.department_id GROUP BY d.department_id ORDER BY SUM(e.salary) DESC LIMIT 1",
            difficulty: "challenging",
            pruning: "Departments and Employees.",
            linking: "Departments.department_name, Employees.salary",
            generation: Gen::All(&["SELECT department_name FROM Departments ORDER BY total_salary DESC LIMIT 1"]),
            correction: &["SELECT department_name FROM Departmentz"],
            selection: FIRST,
            expect: scored(false, false),
        },
        FixtureQuestion {
            qid: "q06",
            db: "company",
            question: "Where is the Support department located?",
            hint: None,
            gold: "SELECT location FROM Departments WHERE department_name = 'Support'",
            difficulty: "simple",
            pruning: "Answer: Departments",
            linking: "Departments.location and Departments.department_name",
            generation: Gen::All(&["I am not sure how to answer this question."]),
            correction: &["```sql\nSELECT location FROM Departments WHERE department_name = 'Support'\n```"],
            selection: FIRST,
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q07",
            db: "shop",
            question: "Which city does the customer Ann live in?",
            hint: None,
            gold: "SELECT city FROM customer WHERE name = 'Ann'",
            difficulty: "simple",
            pruning: "The required tables include customer.",
            linking: "customer.city, customer.name",
            generation: Gen::PerPath([
                &["SELECT name FROM customer WHERE city = 'Oslo'"],
                &["```sql\nSELECT city FROM customer WHERE name = 'Ann'\n```"],
                &["SELECT name FROM customer WHERE city = 'Oslo'"],
                &["```sql\nSELECT city FROM customer WHERE name = 'Ann'\n```"],
            ]),
            correction: BROKEN,
            selection: &["Index: 2"],
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q08",
            db: "shop",
            question: "How many orders did Ben place?",
            hint: None,
            gold: "SELECT COUNT(*) FROM orders o JOIN customer c ON o.customer_id = c.customer_id WHERE c.name = 'Ben'",
            difficulty: "moderate",
            pruning: "The required tables include customer and orders.",
            linking: "orders.customer_id, customer.name",
            generation: Gen::PerPath([
                &["SELECT COUNT(*) FROM orders"],
                &["SELECT COUNT(*) FROM orders WHERE customer_id = 2"],
                &["SELECT COUNT(*) FROM orders"],
                &["SELECT COUNT(*) FROM orders WHERE customer_id = 2"],
            ]),
            correction: BROKEN,
            selection: &["The best query is Index: 1", "Index: 1", "Index: 2"],
            expect: scored(true, false),
        },
        FixtureQuestion {
            qid: "q09",
            db: "shop",
            question: "What is the price of the Desk?",
            hint: None,
            gold: "SELECT price FROM products WHERE title = 'Desk'",
            difficulty: "simple",
            pruning: "I don't know.",
            linking: "products.price and products.title",
            generation: Gen::All(&["```sql\nSELECT price FROM products WHERE title = 'Desk'\n```"]),
            correction: BROKEN,
            selection: FIRST,
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q10",
            db: "shop",
            question: "List the titles of all products ordered by price from lowest to highest.",
            hint: None,
            gold: "SELECT title FROM products ORDER BY price ASC",
            difficulty: "moderate",
            pruning: "The relevant table is products.",
            linking: "products.title, products.price",
            generation: Gen::All(&["SELECT title FROM products"]),
            correction: BROKEN,
            selection: FIRST,
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q11",
            db: "shop",
            question: "Which cities do customers live in?",
            hint: None,
            gold: "SELECT DISTINCT city FROM customer",
            difficulty: "simple",
            pruning: "The relevant table is customer.",
            linking: "customer.city",
            generation: Gen::All(&["SELECT city FROM customer"]),
            correction: BROKEN,
            selection: FIRST,
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q12",
            db: "shop",
            question: "What is the total quantity of items ordered?",
            hint: None,
            gold: "SELECT SUM(quantity) FROM orders",
            difficulty: "moderate",
            pruning: "orders",
            linking: "orders.quantity",
            generation: Gen::All(&["SELECT TOTAL(quantity) FROM orders"]),
            correction: BROKEN,
            selection: FIRST,
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q13",
            db: "school",
            question: "What is the highest score achieved in Biology?",
            hint: Some("Biology has course_id 2."),
            gold: "SELECT MAX(e.score) FROM enrollments e JOIN courses c ON e.course_id = c.course_id WHERE c.title = 'Biology'",
            difficulty: "moderate",
            pruning: "enrollments and courses",
            linking: "enrollments.score, enrollments.course_id, courses.title",
            generation: Gen::PerPath([
                &["SELECT MAX(points) FROM enrollments"],
                &[
                    "SELECT MAX(marks) FROM enrollments",
                    "SELECT MAX(grade_pts) FROM enrollments",
                    "```sql\nSELECT MAX(score) FROM enrollments WHERE course_id = 2\n```",
                    "SELECT MAX(pts) FROM enrollments",
                ],
                &["SELECT MAX(points) FROM enrollments"],
                &["SELECT MAX(points) FROM enrollments"],
            ]),
            correction: BROKEN,
            selection: FIRST,
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q14",
            db: "school",
            question: "Which students are in grade 10?",
            hint: None,
            gold: "SELECT name FROM students WHERE grade = 10",
            difficulty: "simple",
            pruning: "The relevant table is students.",
            linking: "students.name, students.grade",
            generation: Gen::PerPath([
                &["SELECT name FROM students WHERE grade = 11"],
                &["SELECT name FROM students WHERE grade = 10"],
                &["SELECT name FROM students WHERE grade = 11"],
                &["SELECT name FROM students WHERE grade = 10"],
            ]),
            correction: BROKEN,
            selection: &["They all look fine.", "no idea", "cannot decide"],
            expect: scored(true, false),
        },
        FixtureQuestion {
            qid: "q15",
            db: "school",
            question: "How many credits is Chemistry worth?",
            hint: None,
            gold: "SELECT credit_hours FROM courses WHERE title = 'Chemistry'",
            difficulty: "simple",
            pruning: "courses",
            linking: "courses.credits",
            generation: Gen::All(&["SELECT credits FROM courses WHERE title = 'Chemistry'"]),
            correction: BROKEN,
            selection: FIRST,
            expect: Expect::Excluded,
        },
        FixtureQuestion {
            qid: "q16",
            db: "school",
            question: "List the course titles taken by Noah.",
            hint: Some("Noah has student_id 2."),
            gold: "SELECT c.title FROM courses c JOIN enrollments e ON e.course_id = c.course_id JOIN students s ON s.student_id = e.student_id WHERE s.name = 'Noah'",
            difficulty: "challenging",
            pruning: "courses, enrollments and students",
            linking: "courses.title, enrollments.student_id, students.name",
            generation: Gen::PerPath([
                &[RECURSIVE, "SELECT title FROM courses", "SELECT title FROM courses", "SELECT title FROM courses"],
                &["SELECT title FROM courses"],
                &["SELECT title FROM courses"],
                &["SELECT title FROM courses"],
            ]),
            correction: &["SELECT c.title FROM courses c JOIN enrollments e ON e.course_id = c.course_id WHERE e.student_id = 2"],
            selection: &["Index: 2"],
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q17",
            db: "school",
            question: "How many students are there?",
            hint: None,
            gold: "SELECT COUNT(*) FROM students",
            difficulty: "simple",
            pruning: "students",
            linking: "students.student_id",
            generation: Gen::All(&["```sql\nDROP TABLE students\n```"]),
            correction: &["SELECT COUNT(student_id) FROM students"],
            selection: FIRST,
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q18",
            db: "school",
            question: "Which student scored 91 in Algebra?",
            hint: None,
            gold: "SELECT s.name FROM students s JOIN enrollments e ON s.student_id = e.student_id WHERE e.score = 91",
            difficulty: "moderate",
            pruning: "students and enrollments",
            linking: "students.name, enrollments.score",
            generation: Gen::PerPath([
                &["SELECT name FROM students WHERE student_id = 1"],
                &["SELECT name FROM students WHERE student_id = 2"],
                &["SELECT name FROM students WHERE student_id = 3"],
                &["SELECT name FROM students WHERE student_id = 1"],
            ]),
            correction: BROKEN,
            selection: &["Index: 1", "Index: 2", "Index: 3"],
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q19",
            db: "company",
            question: "Who is the highest paid employee?",
            hint: None,
            gold: "SELECT name FROM Employees ORDER BY salary DESC LIMIT 1",
            difficulty: "moderate",
            pruning: "The relevant table is Employees.",
            linking: "Employees.name, Employees.salary",
            generation: Gen::PerPath([
                &["SELECT name FROM Employees ORDER BY salary ASC LIMIT 1"],
                &["SELECT name FROM Employees WHERE salary = (SELECT MAX(salary) FROM Employees)"],
                &["SELECT name FROM Employees ORDER BY hire_year DESC LIMIT 1"],
                &["SELECT name FROM Employees WHERE salary = (SELECT MAX(salary) FROM Employees)"],
            ]),
            correction: BROKEN,
            selection: &["Index: 2", "Index: 3", "Index: 2"],
            expect: scored(true, true),
        },
        FixtureQuestion {
            qid: "q20",
            db: "shop",
            question: "What is the total amount Ann spent?",
            hint: Some("Amount is price multiplied by quantity; Ann is a customer name."),
            gold: "SELECT SUM(p.price * o.quantity) FROM orders o JOIN products p ON o.product_id = p.product_id JOIN customer c ON c.customer_id = o.customer_id WHERE c.name = 'Ann'",
            difficulty: "challenging",
            pruning: "orders, products and customer",
            linking: "products.price, orders.quantity, customer.name",
            generation: Gen::All(&["SELECT SUM(quantity) FROM orders WHERE customer_id = 1; SELECT 2"]),
            correction: BROKEN,
            selection: FIRST,
            expect: scored(true, false),
        },
    ]
}

/// The fixture as a BIRD-format dataset file.
pub fn dataset_json() -> String {
    let entries: Vec<_> = questions()
        .iter()
        .map(|q| {
            json!({
                "question_id": q.qid,
                "db_id": q.db,
                "question": q.question,
                "evidence": q.hint.unwrap_or(""),
                "SQL": q.gold,
                "difficulty": q.difficulty,
            })
        })
        .collect();
    serde_json::to_string_pretty(&entries).unwrap()
}

fn lists(replies: &[&str]) -> Vec<Vec<String>> {
    replies.iter().map(|r| vec![r.to_string()]).collect()
}

/// Replies for every question. Each rule names the role it expects, so a
/// request routed to the wrong model finds no reply.
pub fn script() -> Script {
    let mut script = Script::new();
    for q in questions() {
        let chat = || ScriptRule::new().role(ModelRole::Chat).question(q.qid);
        let sql = || ScriptRule::new().role(ModelRole::Sql).question(q.qid);
        script = script
            .rule(chat().stage(StageKind::Pruning).reply([q.pruning]))
            .rule(chat().stage(StageKind::Linking).reply([q.linking]));
        for stage in [StageKind::SelectionQueryOnly, StageKind::SelectionWithResults] {
            script = script.rule(ScriptRule {
                replies: lists(q.selection),
                ..chat().stage(stage)
            });
        }
        for (i, path) in PathKind::ALL.into_iter().enumerate() {
            let replies = match &q.generation {
                Gen::All(r) => *r,
                Gen::PerPath(per) => per[i],
            };
            let stage = if path.uses_linking() {
                StageKind::GenerationWithLinking
            } else {
                StageKind::GenerationWithoutLinking
            };
            script = script.rule(sql().stage(stage).path(path).reply(replies.iter().copied()));
        }
        script = script.rule(sql().stage(StageKind::Correction).reply(q.correction.iter().copied()));
    }
    script
}

/// Separate scripted backends for the two roles.
pub fn router() -> ModelRouter {
    let mut router = ModelRouter::new();
    router
        .bind(ModelRole::Chat, Arc::new(ScriptedBackend::new(script()).unwrap()))
        .bind(ModelRole::Sql, Arc::new(ScriptedBackend::new(script()).unwrap()));
    router
}

pub fn pipeline_config() -> PipelineConfig {
    PipelineConfig {
        timeout_ms: 500,
        ..PipelineConfig::default()
    }
}

/// Writes databases, dataset and a scripted run config into `dir`; returns
/// the config path.
pub fn write_run_config(dir: &Path, extra_pipeline: serde_json::Value) -> PathBuf {
    build_databases(&dir.join("databases"));
    std::fs::write(dir.join("dev.json"), dataset_json()).unwrap();
    std::fs::write(
        dir.join("script.json"),
        serde_json::to_string_pretty(&script()).unwrap(),
    )
    .unwrap();
    let mut pipeline = json!({"timeout_ms": 500});
    if let (Some(base), Some(extra)) = (pipeline.as_object_mut(), extra_pipeline.as_object()) {
        for (k, v) in extra {
            base.insert(k.clone(), v.clone());
        }
    }
    let config = json!({
        "backends": {
            "chat": {"kind": "script", "path": "script.json"},
            "sql": {"kind": "script", "path": "script.json"},
        },
        "pipeline": pipeline,
        "dataset": {"path": "dev.json", "format": "bird"},
        "database_root": "databases",
        "output_dir": "out",
        "workers": 4,
    });
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

/// Counts EX and EP straight from trace files with plain JSON access and a
/// direct database connection: the predicted and gold queries are re-run and
/// their rows compared as sets of normalised strings.
pub struct IndependentCount {
    pub total: usize,
    pub excluded: usize,
    pub executable: usize,
    pub correct: usize,
}

impl IndependentCount {
    pub fn ex(&self) -> f64 {
        100.0 * self.correct as f64 / self.total as f64
    }

    pub fn ep(&self) -> f64 {
        100.0 * self.executable as f64 / self.total as f64
    }
}

fn rows_as_set(conn: &Connection, sql: &str) -> Option<std::collections::BTreeSet<String>> {
    let mut stmt = conn.prepare(sql).ok()?;
    let width = stmt.column_count();
    let mut rows = stmt.query([]).ok()?;
    let mut set = std::collections::BTreeSet::new();
    while let Some(row) = rows.next().ok()? {
        let mut cells = Vec::new();
        for i in 0..width {
            let cell = match row.get_ref(i).ok()? {
                rusqlite::types::ValueRef::Null => "NULL".to_string(),
                rusqlite::types::ValueRef::Integer(v) => format!("{:.6}", v as f64),
                rusqlite::types::ValueRef::Real(v) => format!("{v:.6}"),
                rusqlite::types::ValueRef::Text(t) => format!("'{}'", String::from_utf8_lossy(t)),
                rusqlite::types::ValueRef::Blob(b) => format!("{b:?}"),
            };
            cells.push(cell);
        }
        set.insert(cells.join("|"));
    }
    Some(set)
}

pub fn independent_count(trace_dir: &Path, db_root: &Path) -> IndependentCount {
    let mut count = IndependentCount {
        total: 0,
        excluded: 0,
        executable: 0,
        correct: 0,
    };
    for entry in std::fs::read_dir(trace_dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "jsonl") {
            continue;
        }
        let record: serde_json::Value = serde_json::from_str(std::fs::read_to_string(&path).unwrap().trim()).unwrap();
        let db = record["db_id"].as_str().unwrap();
        let conn =
            Connection::open_with_flags(db_path(db_root, db), rusqlite::OpenFlags::SQLITE_OPEN_READ_ONLY).unwrap();
        let Some(gold) = rows_as_set(&conn, record["gold_sql"].as_str().unwrap()) else {
            count.excluded += 1;
            continue;
        };
        count.total += 1;
        // only a selected candidate counts as an answer
        if record["selected_id"].is_null() {
            continue;
        }
        let predicted = record["predicted_sql"].as_str().unwrap();
        if let Some(rows) = rows_as_set(&conn, predicted) {
            count.executable += 1;
            if rows == gold {
                count.correct += 1;
            }
        }
    }
    count
}

/// Top-N by brute force over the raw candidate labels of the traces: a
/// question counts when some correct candidate has fewer than `n`
/// candidates with a smaller id.
pub fn brute_force_top_n(trace_dir: &Path, n: usize) -> f64 {
    let (mut hits, mut total) = (0usize, 0usize);
    for entry in std::fs::read_dir(trace_dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "jsonl") {
            continue;
        }
        let record: serde_json::Value = serde_json::from_str(std::fs::read_to_string(&path).unwrap().trim()).unwrap();
        if !record["gold_error"].is_null() {
            continue;
        }
        total += 1;
        let candidates = record["candidates"].as_array().unwrap();
        let ids: Vec<u64> = candidates.iter().map(|c| c["id"].as_u64().unwrap()).collect();
        let hit = candidates.iter().any(|c| {
            let id = c["id"].as_u64().unwrap();
            c["correct"] == true && ids.iter().filter(|&&other| other < id).count() < n
        });
        hits += usize::from(hit);
    }
    if total == 0 {
        0.0
    } else {
        100.0 * hits as f64 / total as f64
    }
}

/// Expected counts from the hand labels.
pub fn labelled_counts() -> (usize, usize, usize, usize) {
    let mut total = 0;
    let mut excluded = 0;
    let mut executable = 0;
    let mut correct = 0;
    for q in questions() {
        match q.expect {
            Expect::Excluded => excluded += 1,
            Expect::Scored {
                executable: e,
                correct: c,
            } => {
                total += 1;
                executable += usize::from(e);
                correct += usize::from(c);
            }
        }
    }
    (total, excluded, executable, correct)
}
