use std::sync::Arc;

use super::lexer::{lex, Tok, Token};
use crate::error::{Error, Result};
use crate::mir::{
    ClassDef, FieldDef, Index, InterfaceDef, MethodDef, MethodKind, MethodSig, Operand, Position,
    Program, Provenance, Stmt, StmtKind,
};

const KEYWORDS: &[&str] = &[
    "class",
    "interface",
    "extends",
    "implements",
    "field",
    "static",
    "public",
    "private",
    "method",
    "ctor",
    "if",
    "else",
    "while",
    "call",
    "return",
    "new",
    "mkref",
    "newarr",
    "op",
];

pub(crate) struct Parser {
    file: Arc<str>,
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    pub(crate) fn new(file: &str, text: &str) -> Result<Self> {
        Ok(Parser {
            file: file.into(),
            toks: lex(file, text)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.at + n).min(self.toks.len() - 1)].tok
    }

    fn line(&self) -> u32 {
        self.toks[self.at].line
    }

    fn pos(&self) -> Position {
        Position {
            file: self.file.clone(),
            line: self.line(),
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T> {
        // A missing terminator is reported on the line of the construct it ends.
        let line = if self.at > 0 && expected.starts_with("`;`") {
            self.toks[self.at - 1].line
        } else {
            self.line()
        };
        Err(Error::Syntax {
            file: self.file.to_string(),
            line,
            message: format!("expected {expected}, found {}", self.peek()),
        })
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.error(&t.to_string())
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.error("identifier"),
        }
    }

    fn ty(&mut self) -> Result<String> {
        let mut t = self.ident()?;
        if *self.peek() == Tok::LBracket {
            self.bump();
            self.expect(Tok::RBracket)?;
            t.push_str("[]");
        }
        Ok(t)
    }

    pub(crate) fn program(&mut self) -> Result<Program> {
        let mut p = Program::default();
        loop {
            match self.peek() {
                Tok::Eof => return Ok(p),
                Tok::Ident(s) if s == "class" => p.classes.push(self.class()?),
                Tok::Ident(s) if s == "interface" => p.interfaces.push(self.interface()?),
                _ => return self.error("`class` or `interface`"),
            }
        }
    }

    fn ident_list(&mut self) -> Result<Vec<String>> {
        let mut out = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn interface(&mut self) -> Result<InterfaceDef> {
        let pos = self.pos();
        self.expect_kw("interface")?;
        let name = self.ident()?;
        let extends = if self.eat_kw("extends") {
            self.ident_list()?
        } else {
            Vec::new()
        };
        self.expect(Tok::LBrace)?;
        let mut methods = Vec::new();
        while *self.peek() != Tok::RBrace {
            let pos = self.pos();
            self.eat_kw("public");
            self.expect_kw("method")?;
            let name = self.ident()?;
            let params = self.params()?;
            self.expect(Tok::Semi)?;
            methods.push(MethodSig { name, params, pos });
        }
        self.expect(Tok::RBrace)?;
        Ok(InterfaceDef {
            name,
            extends,
            methods,
            pos,
        })
    }

    fn class(&mut self) -> Result<ClassDef> {
        let pos = self.pos();
        self.expect_kw("class")?;
        let name = self.ident()?;
        let superclass = if self.eat_kw("extends") {
            Some(self.ident()?)
        } else {
            None
        };
        let interfaces = if self.eat_kw("implements") {
            self.ident_list()?
        } else {
            Vec::new()
        };
        self.expect(Tok::LBrace)?;
        let mut class = ClassDef {
            name,
            superclass,
            interfaces,
            fields: vec![],
            methods: vec![],
            constructors: vec![],
            pos,
        };
        while *self.peek() != Tok::RBrace {
            self.member(&mut class)?;
        }
        self.expect(Tok::RBrace)?;
        Ok(class)
    }

    fn member(&mut self, class: &mut ClassDef) -> Result<()> {
        let pos = self.pos();
        if self.eat_kw("field") {
            let is_static = self.eat_kw("static");
            let name = self.ident()?;
            self.expect(Tok::Colon)?;
            let ty = self.ty()?;
            self.expect(Tok::Semi)?;
            class.fields.push(FieldDef {
                name,
                ty,
                is_static,
                pos,
            });
            return Ok(());
        }
        let is_public = if self.eat_kw("private") {
            false
        } else {
            self.eat_kw("public");
            true
        };
        if self.eat_kw("ctor") {
            let params = self.params()?;
            let body = self.block()?;
            class.constructors.push(MethodDef {
                name: crate::mir::CTOR_NAME.to_string(),
                params,
                is_static: false,
                is_public,
                body,
                declaring_class: class.name.clone(),
                kind: MethodKind::Constructor,
                pos,
            });
            return Ok(());
        }
        let is_static = self.eat_kw("static");
        if !self.is_kw("method") {
            return self.error("`field`, `method` or `ctor`");
        }
        self.bump();
        let name = self.ident()?;
        let params = self.params()?;
        let body = self.block()?;
        class.methods.push(MethodDef {
            name,
            params,
            is_static,
            is_public,
            body,
            declaring_class: class.name.clone(),
            kind: MethodKind::Method,
            pos,
        });
        Ok(())
    }

    fn params(&mut self) -> Result<Vec<String>> {
        self.expect(Tok::LParen)?;
        let params = if *self.peek() == Tok::RParen {
            Vec::new()
        } else {
            self.ident_list()?
        };
        self.expect(Tok::RParen)?;
        Ok(params)
    }

    fn block(&mut self) -> Result<Vec<Stmt>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return self.error("`}`");
            }
            out.push(self.stmt()?);
        }
        self.bump();
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt> {
        let pos = self.pos();
        if self.eat_kw("if") {
            let cond = self.ident()?;
            let then_block = self.block()?;
            let else_block = if self.eat_kw("else") {
                self.block()?
            } else {
                Vec::new()
            };
            return Ok(Stmt {
                pos,
                provenance: Provenance::Base,
                kind: StmtKind::If {
                    cond,
                    then_block,
                    else_block,
                },
            });
        }
        if self.eat_kw("while") {
            let cond = self.ident()?;
            let body = self.block()?;
            return Ok(Stmt {
                pos,
                provenance: Provenance::Base,
                kind: StmtKind::While { cond, body },
            });
        }
        let kind = self.simple()?;
        let provenance = match self.peek() {
            Tok::MarkL => {
                self.bump();
                Provenance::Left
            }
            Tok::MarkR => {
                self.bump();
                Provenance::Right
            }
            _ => Provenance::Base,
        };
        self.expect(Tok::Semi)?;
        Ok(Stmt {
            pos,
            provenance,
            kind,
        })
    }

    fn args(&mut self) -> Result<Vec<Operand>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if *self.peek() != Tok::RParen {
            out.push(self.operand()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                out.push(self.operand()?);
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn operand(&mut self) -> Result<Operand> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Operand::Int(i))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Operand::Str(s))
            }
            _ => Ok(Operand::Local(self.ident()?)),
        }
    }

    fn index(&mut self) -> Result<Index> {
        self.expect(Tok::LBracket)?;
        let idx = match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Index::Const(i)
            }
            _ => Index::Local(self.ident()?),
        };
        self.expect(Tok::RBracket)?;
        Ok(idx)
    }

    /// `recv.m(args)` or `C::m(args)`, the leading identifier already consumed.
    fn call_tail(&mut self, head: String, result: Option<String>) -> Result<StmtKind> {
        match self.bump() {
            Tok::Dot => {
                let method = self.ident()?;
                let args = self.args()?;
                Ok(StmtKind::VirtualCall {
                    receiver: head,
                    method,
                    args,
                    result,
                })
            }
            Tok::ColonColon => {
                let method = self.ident()?;
                let args = self.args()?;
                Ok(StmtKind::StaticCall {
                    class: head,
                    method,
                    args,
                    result,
                })
            }
            _ => {
                self.at -= 1;
                self.error("`.` or `::`")
            }
        }
    }

    fn simple(&mut self) -> Result<StmtKind> {
        if self.eat_kw("call") {
            let head = self.ident()?;
            return self.call_tail(head, None);
        }
        if self.eat_kw("return") {
            return Ok(StmtKind::Return(if matches!(self.peek(), Tok::Ident(_)) {
                Some(self.ident()?)
            } else {
                None
            }));
        }
        let head = self.ident()?;
        enum Lhs {
            Local,
            Field(String),
            Array(Index),
            Static(String),
        }
        let lhs = match self.peek() {
            Tok::Dot => {
                self.bump();
                Lhs::Field(self.ident()?)
            }
            Tok::ColonColon => {
                self.bump();
                Lhs::Static(self.ident()?)
            }
            Tok::LBracket => Lhs::Array(self.index()?),
            _ => Lhs::Local,
        };
        self.expect(Tok::Eq)?;
        match lhs {
            Lhs::Local => self.local_rhs(head),
            store => {
                let source = self.operand()?;
                if !matches!(self.peek(), Tok::Semi | Tok::MarkL | Tok::MarkR) {
                    return self.error("`;` (a store's source must be a local or a constant)");
                }
                Ok(match store {
                    Lhs::Field(field) => StmtKind::FieldStore {
                        base: head,
                        field,
                        source,
                    },
                    Lhs::Array(index) => StmtKind::ArrayStore {
                        base: head,
                        index,
                        source,
                    },
                    Lhs::Static(field) => StmtKind::StaticStore {
                        class: head,
                        field,
                        source,
                    },
                    Lhs::Local => unreachable!(),
                })
            }
        }
    }

    fn local_rhs(&mut self, target: String) -> Result<StmtKind> {
        if self.eat_kw("new") {
            let class = self.ident()?;
            let args = self.args()?;
            return Ok(StmtKind::AllocAssign {
                target,
                class,
                args,
            });
        }
        if self.eat_kw("mkref") {
            let ty = self.ident()?;
            return Ok(StmtKind::ReflectiveAssign { target, ty });
        }
        if self.eat_kw("newarr") {
            let elem_ty = self.ty()?;
            let len = match self.bump() {
                Tok::Int(n) => n,
                _ => {
                    self.at -= 1;
                    return self.error("array length");
                }
            };
            return Ok(StmtKind::ArrayAlloc {
                target,
                elem_ty,
                len,
            });
        }
        if self.is_kw("op") && *self.peek_at(1) == Tok::LParen {
            self.bump();
            let operands = self.args()?;
            return Ok(StmtKind::OpaqueOp { target, operands });
        }
        match self.peek().clone() {
            Tok::Int(_) | Tok::Str(_) => {
                let source = self.operand()?;
                return Ok(StmtKind::CopyAssign { target, source });
            }
            _ => {}
        }
        let head = self.ident()?;
        match (self.peek().clone(), self.peek_at(2).clone()) {
            (Tok::Dot | Tok::ColonColon, Tok::LParen) => self.call_tail(head, Some(target)),
            (Tok::Dot, _) => {
                self.bump();
                let field = self.ident()?;
                Ok(StmtKind::FieldLoad {
                    target,
                    base: head,
                    field,
                })
            }
            (Tok::ColonColon, _) => {
                self.bump();
                let field = self.ident()?;
                Ok(StmtKind::StaticLoad {
                    target,
                    class: head,
                    field,
                })
            }
            (Tok::LBracket, _) => {
                let index = self.index()?;
                Ok(StmtKind::ArrayLoad {
                    target,
                    base: head,
                    index,
                })
            }
            _ => Ok(StmtKind::CopyAssign {
                target,
                source: Operand::Local(head),
            }),
        }
    }
}
