//! Abstract syntax of property scripts.
//!
//! A script is a list of `upon` blocks. Each block is replicated once per
//! context key: the replication event opens an instance, rules whose action
//! is `Done` close it.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Component label used when a declaration carries no `@label` tag.
pub const DEFAULT_COMPONENT: &str = "main";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecAst {
    /// Components declared in the script header with `component <label>;`.
    pub components: Vec<String>,
    pub upons: Vec<UponBlock>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UponBlock {
    pub replication_event: String,
    pub context_var: String,
    pub state: Vec<StateDecl>,
    pub events: Vec<EventDecl>,
    pub conditions: Vec<CallableDecl>,
    pub actions: Vec<CallableDecl>,
    pub rules: Vec<Rule>,
}

impl UponBlock {
    pub fn event(&self, name: &str) -> Option<&EventDecl> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn condition(&self, name: &str) -> Option<&CallableDecl> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&CallableDecl> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn state_decl(&self, name: &str) -> Option<&StateDecl> {
        self.state.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDecl {
    pub name: String,
    pub params: Vec<String>,
    pub component: String,
    pub trigger: Trigger,
}

/// The system call an event is attached to, e.g. `customer.makePayment(card)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trigger {
    /// Dotted callable path.
    pub callable: String,
    pub args: Vec<String>,
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.callable, self.args.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locale {
    MonitorSide,
    SystemSide(String),
}

impl Locale {
    pub fn component(&self) -> Option<&str> {
        match self {
            Locale::MonitorSide => None,
            Locale::SystemSide(label) => Some(label),
        }
    }
}

/// A condition or action declaration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallableDecl {
    pub name: String,
    pub params: Vec<String>,
    pub locale: Locale,
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Body {
    /// Monitor-side expression.
    Expr(Expr),
    /// `...`: behaviour supplied outside the script. A monitor-side opaque
    /// action reports a violation verdict when it fires.
    Opaque,
    /// Raw code of the owning component, kept verbatim for documentation.
    Native(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDecl {
    pub name: String,
    pub kind: ValueKind,
    pub locale: Locale,
    /// Present for monitor-side state, absent for system-side state.
    pub initial: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub label: Option<String>,
    pub event: String,
    /// Variables bound positionally to the event's parameters. `None` when the
    /// rule wrote the event without an argument list.
    pub bindings: Option<Vec<String>>,
    pub condition: Option<CondRef>,
    pub action: ActionRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondRef {
    pub negated: bool,
    pub name: String,
    /// `None` means arguments are passed implicitly by parameter name.
    pub args: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionRef {
    Invoke { name: String, args: Option<Vec<String>> },
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnaryOp {
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Le => "<=",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    pub fn is_relational(self) -> bool {
        matches!(self, BinaryOp::Lt | BinaryOp::Gt | BinaryOp::Le | BinaryOp::Ge)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or)
    }
}

/// Monitor-side expression language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Literal(Value),
    /// State variable.
    Var(String),
    /// Parameter of the enclosing declaration.
    Param(String),
    Index(Box<Expr>, Box<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Assign(String, Box<Expr>),
    AssignIndex(String, Box<Expr>, Box<Expr>),
    /// Two or more expressions evaluated in order.
    Seq(Vec<Expr>),
}

impl Expr {
    pub fn has_assignment(&self) -> bool {
        match self {
            Expr::Literal(_) | Expr::Var(_) | Expr::Param(_) => false,
            Expr::Assign(..) | Expr::AssignIndex(..) => true,
            Expr::Index(a, b) | Expr::Binary(_, a, b) => a.has_assignment() || b.has_assignment(),
            Expr::Unary(_, e) => e.has_assignment(),
            Expr::Seq(items) => items.iter().any(Expr::has_assignment),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarKind {
    Bool,
    Int,
    Str,
}

impl ScalarKind {
    pub fn default_value(self) -> Value {
        match self {
            ScalarKind::Bool => Value::Bool(false),
            ScalarKind::Int => Value::Int(0),
            ScalarKind::Str => Value::Str(String::new()),
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ScalarKind::Bool => "bool",
            ScalarKind::Int => "int",
            ScalarKind::Str => "string",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Scalar(ScalarKind),
    /// Map from string keys to scalars; absent keys read as the scalar default.
    Map(ScalarKind),
}

impl ValueKind {
    pub fn default_value(self) -> Value {
        match self {
            ValueKind::Scalar(k) => k.default_value(),
            ValueKind::Map(k) => Value::Map(MapValue::empty(k)),
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueKind::Scalar(k) => f.write_str(k.keyword()),
            ValueKind::Map(k) => write!(f, "{}[]", k.keyword()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
    Map(MapValue),
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Bool(_) => ValueKind::Scalar(ScalarKind::Bool),
            Value::Int(_) => ValueKind::Scalar(ScalarKind::Int),
            Value::Str(_) => ValueKind::Scalar(ScalarKind::Str),
            Value::Map(m) => ValueKind::Map(m.elem),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => f.write_str(s),
            Value::Map(m) => {
                f.write_str("{")?;
                for (i, (k, v)) in m.entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapValue {
    pub elem: ScalarKind,
    pub entries: BTreeMap<String, Value>,
}

impl MapValue {
    pub fn empty(elem: ScalarKind) -> Self {
        MapValue { elem, entries: BTreeMap::new() }
    }

    pub fn get(&self, key: &str) -> Value {
        self.entries.get(key).cloned().unwrap_or_else(|| self.elem.default_value())
    }
}
