use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Value>),
    Module(&'static str),
}

type R<T> = Result<T, String>;

fn overflow() -> String {
    "OverflowError: integer result exceeds 64 bits".into()
}

fn zero_div() -> String {
    "ZeroDivisionError: division by zero".into()
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::None => "NoneType",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Str(_) => "str",
            Value::List(_) => "list",
            Value::Module(_) => "module",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::None => false,
            Value::Bool(b) => *b,
            Value::Int(i) => *i != 0,
            Value::Float(f) => *f != 0.0,
            Value::Str(s) => !s.is_empty(),
            Value::List(l) => !l.is_empty(),
            Value::Module(_) => true,
        }
    }

    /// Python `str()`.
    pub fn to_str(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            other => other.repr(),
        }
    }

    /// Python `repr()`.
    pub fn repr(&self) -> String {
        match self {
            Value::None => "None".into(),
            Value::Bool(true) => "True".into(),
            Value::Bool(false) => "False".into(),
            Value::Int(i) => i.to_string(),
            Value::Float(f) => format_float(*f),
            Value::Str(s) => format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'")),
            Value::List(items) => format!(
                "[{}]",
                items.iter().map(Value::repr).collect::<Vec<_>>().join(", ")
            ),
            Value::Module(m) => format!("<module '{m}'>"),
        }
    }

    pub fn approx_size(&self) -> u64 {
        match self {
            Value::Str(s) => s.len() as u64,
            Value::List(items) => items.iter().map(|v| 16 + v.approx_size()).sum(),
            _ => 16,
        }
    }

    fn as_number(&self) -> Option<Num> {
        match self {
            Value::Bool(b) => Some(Num::Int(*b as i64)),
            Value::Int(i) => Some(Num::Int(*i)),
            Value::Float(f) => Some(Num::Float(*f)),
            _ => None,
        }
    }

    fn as_int(&self) -> Option<i64> {
        match self.as_number()? {
            Num::Int(i) => Some(i),
            Num::Float(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Num {
    Int(i64),
    Float(f64),
}

impl Num {
    fn f(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Float(f) => f,
        }
    }
}

/// Python's float `repr`: shortest round-trip digits, fixed notation for
/// decimal exponents in `-4..16`, scientific otherwise.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{:e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("{:e} always has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if x < 0.0 { "-" } else { "" };
    if (-4..16).contains(&exp) {
        let body = if exp >= 0 {
            let int_len = exp as usize + 1;
            if digits.len() <= int_len {
                format!("{}{}.0", digits, "0".repeat(int_len - digits.len()))
            } else {
                format!("{}.{}", &digits[..int_len], &digits[int_len..])
            }
        } else {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        };
        format!("{sign}{body}")
    } else {
        let mant = if digits.len() > 1 {
            format!("{}.{}", &digits[..1], &digits[1..])
        } else {
            digits
        };
        let esign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{mant}e{esign}{:02}", exp.abs())
    }
}

/// Bytes a `str * n` or `list * n` would allocate, computed before doing it.
pub fn repetition_size(op: &str, l: &Value, r: &Value) -> Option<u64> {
    if op != "*" {
        return None;
    }
    let (seq, n) = match (l, r) {
        (Value::Str(_) | Value::List(_), n) => (l, n.as_int()?),
        (n, Value::Str(_) | Value::List(_)) => (r, n.as_int()?),
        _ => return None,
    };
    Some(seq.approx_size().saturating_mul(n.max(0) as u64))
}

pub fn binary(op: &str, l: Value, r: Value) -> R<Value> {
    if let (Some(a), Some(b)) = (l.as_number(), r.as_number()) {
        return numeric(op, a, b);
    }
    match (op, l, r) {
        ("+", Value::Str(a), Value::Str(b)) => Ok(Value::Str(a + &b)),
        ("+", Value::List(mut a), Value::List(b)) => {
            a.extend(b);
            Ok(Value::List(a))
        }
        ("*", Value::Str(s), n) | ("*", n, Value::Str(s)) if n.as_int().is_some() => {
            Ok(Value::Str(s.repeat(n.as_int().unwrap().max(0) as usize)))
        }
        ("*", Value::List(items), n) | ("*", n, Value::List(items)) if n.as_int().is_some() => {
            let k = n.as_int().unwrap().max(0) as usize;
            let mut out = Vec::with_capacity(items.len() * k);
            for _ in 0..k {
                out.extend(items.iter().cloned());
            }
            Ok(Value::List(out))
        }
        (op, l, r) => Err(format!(
            "TypeError: unsupported operand type(s) for {op}: '{}' and '{}'",
            l.type_name(),
            r.type_name()
        )),
    }
}

fn numeric(op: &str, a: Num, b: Num) -> R<Value> {
    use Num::*;
    Ok(match (a, b) {
        (Int(x), Int(y)) => match op {
            "+" => Value::Int(x.checked_add(y).ok_or_else(overflow)?),
            "-" => Value::Int(x.checked_sub(y).ok_or_else(overflow)?),
            "*" => Value::Int(x.checked_mul(y).ok_or_else(overflow)?),
            "/" => {
                if y == 0 {
                    return Err(zero_div());
                }
                Value::Float(x as f64 / y as f64)
            }
            "//" => {
                if y == 0 {
                    return Err(zero_div());
                }
                let q = x.checked_div(y).ok_or_else(overflow)?;
                Value::Int(if x % y != 0 && ((x < 0) != (y < 0)) { q - 1 } else { q })
            }
            "%" => {
                if y == 0 {
                    return Err(zero_div());
                }
                let r = x.checked_rem(y).ok_or_else(overflow)?;
                Value::Int(if r != 0 && ((r < 0) != (y < 0)) { r + y } else { r })
            }
            "**" => {
                if y >= 0 {
                    let e = u32::try_from(y).map_err(|_| overflow())?;
                    Value::Int(x.checked_pow(e).ok_or_else(overflow)?)
                } else {
                    return float_op(op, x as f64, y as f64);
                }
            }
            _ => unreachable!("unknown operator {op}"),
        },
        (a, b) => return float_op(op, a.f(), b.f()),
    })
}

fn float_op(op: &str, x: f64, y: f64) -> R<Value> {
    Ok(Value::Float(match op {
        "+" => x + y,
        "-" => x - y,
        "*" => x * y,
        "/" => {
            if y == 0.0 {
                return Err(zero_div());
            }
            x / y
        }
        "//" => {
            if y == 0.0 {
                return Err(zero_div());
            }
            (x / y).floor()
        }
        "%" => {
            if y == 0.0 {
                return Err(zero_div());
            }
            let r = x % y;
            if r != 0.0 && ((r < 0.0) != (y < 0.0)) {
                r + y
            } else {
                r
            }
        }
        "**" => {
            if x == 0.0 && y < 0.0 {
                return Err("ZeroDivisionError: 0.0 cannot be raised to a negative power".into());
            }
            if x < 0.0 && y.fract() != 0.0 {
                return Err("ValueError: complex results are not supported".into());
            }
            let v = x.powf(y);
            if v.is_infinite() && x.is_finite() && y.is_finite() {
                return Err("OverflowError: numerical result out of range".into());
            }
            v
        }
        _ => unreachable!("unknown operator {op}"),
    }))
}

pub fn compare(op: &str, l: &Value, r: &Value) -> R<bool> {
    match op {
        "==" => Ok(equals(l, r)),
        "!=" => Ok(!equals(l, r)),
        "in" | "not in" => {
            let found = match r {
                Value::List(items) => items.iter().any(|v| equals(l, v)),
                Value::Str(hay) => match l {
                    Value::Str(needle) => hay.contains(needle.as_str()),
                    _ => {
                        return Err(format!(
                            "TypeError: 'in <string>' requires string as left operand, not {}",
                            l.type_name()
                        ))
                    }
                },
                other => {
                    return Err(format!(
                        "TypeError: argument of type '{}' is not iterable",
                        other.type_name()
                    ))
                }
            };
            Ok(found == (op == "in"))
        }
        _ => {
            let ord = order(l, r).ok_or_else(|| {
                format!(
                    "TypeError: '{op}' not supported between instances of '{}' and '{}'",
                    l.type_name(),
                    r.type_name()
                )
            })?;
            Ok(match op {
                "<" => ord == Ordering::Less,
                "<=" => ord != Ordering::Greater,
                ">" => ord == Ordering::Greater,
                ">=" => ord != Ordering::Less,
                _ => unreachable!("unknown comparison {op}"),
            })
        }
    }
}

fn equals(l: &Value, r: &Value) -> bool {
    match (l.as_number(), r.as_number()) {
        (Some(Num::Int(a)), Some(Num::Int(b))) => a == b,
        (Some(a), Some(b)) => a.f() == b.f(),
        _ => match (l, r) {
            (Value::List(a), Value::List(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| equals(x, y))
            }
            _ => l == r,
        },
    }
}

fn order(l: &Value, r: &Value) -> Option<Ordering> {
    match (l.as_number(), r.as_number()) {
        (Some(Num::Int(a)), Some(Num::Int(b))) => Some(a.cmp(&b)),
        (Some(a), Some(b)) => a.f().partial_cmp(&b.f()),
        _ => match (l, r) {
            (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
            (Value::List(a), Value::List(b)) => {
                for (x, y) in a.iter().zip(b) {
                    if !equals(x, y) {
                        return order(x, y);
                    }
                }
                Some(a.len().cmp(&b.len()))
            }
            _ => None,
        },
    }
}

pub fn index(target: &Value, idx: &Value) -> R<Value> {
    let i = idx
        .as_int()
        .ok_or_else(|| format!("TypeError: indices must be integers, not {}", idx.type_name()))?;
    let resolve = |len: usize| -> R<usize> {
        let j = if i < 0 { i + len as i64 } else { i };
        if j < 0 || j >= len as i64 {
            Err("IndexError: index out of range".into())
        } else {
            Ok(j as usize)
        }
    };
    match target {
        Value::List(items) => Ok(items[resolve(items.len())?].clone()),
        Value::Str(s) => {
            let chars: Vec<char> = s.chars().collect();
            Ok(Value::Str(chars[resolve(chars.len())?].to_string()))
        }
        other => Err(format!(
            "TypeError: '{}' object is not subscriptable",
            other.type_name()
        )),
    }
}

fn arity(name: &str, args: &[Value], lo: usize, hi: usize) -> R<()> {
    if args.len() < lo || args.len() > hi {
        return Err(format!(
            "TypeError: {name}() takes {lo}..{hi} arguments ({} given)",
            args.len()
        ));
    }
    Ok(())
}

fn number(name: &str, v: &Value) -> R<Num> {
    v.as_number().ok_or_else(|| {
        format!(
            "TypeError: {name}() expects a number, got '{}'",
            v.type_name()
        )
    })
}

fn int_arg(name: &str, v: &Value) -> R<i64> {
    v.as_int().ok_or_else(|| {
        format!(
            "TypeError: {name}() expects an integer, got '{}'",
            v.type_name()
        )
    })
}

/// Elements for `min`/`max`/`sum`: a single list argument or the args themselves.
fn iterable<'a>(args: &'a [Value]) -> &'a [Value] {
    match args {
        [Value::List(items)] => items,
        _ => args,
    }
}

fn float_to_int(f: f64) -> R<i64> {
    if !f.is_finite() {
        return Err("ValueError: cannot convert non-finite float to integer".into());
    }
    if f.abs() >= 9.2e18 {
        return Err(overflow());
    }
    Ok(f as i64)
}

pub fn builtin(name: &str, args: &[Value]) -> R<Value> {
    match name {
        "abs" => {
            arity(name, args, 1, 1)?;
            Ok(match number(name, &args[0])? {
                Num::Int(i) => Value::Int(i.checked_abs().ok_or_else(overflow)?),
                Num::Float(f) => Value::Float(f.abs()),
            })
        }
        "min" | "max" => {
            let items = iterable(args);
            let mut best = items
                .first()
                .ok_or_else(|| format!("ValueError: {name}() arg is an empty sequence"))?;
            for v in &items[1..] {
                let ord = order(v, best).ok_or_else(|| {
                    format!("TypeError: cannot compare '{}' and '{}'", v.type_name(), best.type_name())
                })?;
                if (name == "min" && ord == Ordering::Less) || (name == "max" && ord == Ordering::Greater)
                {
                    best = v;
                }
            }
            Ok(best.clone())
        }
        "sum" => {
            arity(name, args, 1, 2)?;
            let Value::List(items) = &args[0] else {
                return Err(format!(
                    "TypeError: '{}' object is not iterable",
                    args[0].type_name()
                ));
            };
            let mut acc = args.get(1).cloned().unwrap_or(Value::Int(0));
            for v in items {
                acc = binary("+", acc, v.clone())?;
            }
            Ok(acc)
        }
        "round" => {
            arity(name, args, 1, 2)?;
            let x = number(name, &args[0])?;
            match args.get(1) {
                None | Some(Value::None) => match x {
                    Num::Int(i) => Ok(Value::Int(i)),
                    Num::Float(f) => Ok(Value::Int(float_to_int(f.round_ties_even())?)),
                },
                Some(nd) => {
                    let nd = int_arg(name, nd)?;
                    match x {
                        Num::Int(i) if nd >= 0 => Ok(Value::Int(i)),
                        Num::Int(i) => {
                            let p = 10i64.checked_pow((-nd) as u32).ok_or_else(overflow)?;
                            let q = (i as f64 / p as f64).round_ties_even() as i64;
                            Ok(Value::Int(q.checked_mul(p).ok_or_else(overflow)?))
                        }
                        Num::Float(f) if !f.is_finite() => Ok(Value::Float(f)),
                        Num::Float(f) if nd >= 0 => {
                            let s = format!("{:.*}", nd.min(340) as usize, f);
                            Ok(Value::Float(s.parse().map_err(|_| overflow())?))
                        }
                        Num::Float(f) => {
                            let p = 10f64.powi((-nd) as i32);
                            Ok(Value::Float((f / p).round_ties_even() * p))
                        }
                    }
                }
            }
        }
        "int" => {
            arity(name, args, 1, 1)?;
            match &args[0] {
                Value::Str(s) => s
                    .trim()
                    .replace('_', "")
                    .parse::<i64>()
                    .map(Value::Int)
                    .map_err(|_| format!("ValueError: invalid literal for int(): {s:?}")),
                v => match number(name, v)? {
                    Num::Int(i) => Ok(Value::Int(i)),
                    Num::Float(f) => Ok(Value::Int(float_to_int(f.trunc())?)),
                },
            }
        }
        "float" => {
            arity(name, args, 1, 1)?;
            match &args[0] {
                Value::Str(s) => {
                    let t = s.trim().to_ascii_lowercase();
                    match t.as_str() {
                        "inf" | "+inf" | "infinity" => Ok(Value::Float(f64::INFINITY)),
                        "-inf" | "-infinity" => Ok(Value::Float(f64::NEG_INFINITY)),
                        "nan" => Ok(Value::Float(f64::NAN)),
                        _ => t
                            .parse::<f64>()
                            .map(Value::Float)
                            .map_err(|_| format!("ValueError: could not convert string to float: {s:?}")),
                    }
                }
                v => Ok(Value::Float(number(name, v)?.f())),
            }
        }
        "str" => {
            arity(name, args, 1, 1)?;
            Ok(Value::Str(args[0].to_str()))
        }
        "bool" => {
            arity(name, args, 1, 1)?;
            Ok(Value::Bool(args[0].truthy()))
        }
        "len" => {
            arity(name, args, 1, 1)?;
            match &args[0] {
                Value::Str(s) => Ok(Value::Int(s.chars().count() as i64)),
                Value::List(l) => Ok(Value::Int(l.len() as i64)),
                other => Err(format!(
                    "TypeError: object of type '{}' has no len()",
                    other.type_name()
                )),
            }
        }
        "pow" => {
            arity(name, args, 2, 2)?;
            binary("**", args[0].clone(), args[1].clone())
        }
        "sorted" => {
            arity(name, args, 1, 1)?;
            let Value::List(items) = &args[0] else {
                return Err("TypeError: sorted() expects a list".into());
            };
            let mut items = items.clone();
            let mut failed = false;
            items.sort_by(|a, b| {
                order(a, b).unwrap_or_else(|| {
                    failed = true;
                    Ordering::Equal
                })
            });
            if failed {
                return Err("TypeError: list elements are not mutually comparable".into());
            }
            Ok(Value::List(items))
        }
        _ => Err(format!("NameError: name '{name}' is not defined")),
    }
}

pub fn range_args(args: &[Value]) -> R<(i64, i64, i64)> {
    arity("range", args, 1, 3)?;
    let ints: Vec<i64> = args
        .iter()
        .map(|v| int_arg("range", v))
        .collect::<R<_>>()?;
    let (start, stop, step) = match ints.as_slice() {
        [stop] => (0, *stop, 1),
        [start, stop] => (*start, *stop, 1),
        [start, stop, step] => (*start, *stop, *step),
        _ => unreachable!(),
    };
    if step == 0 {
        return Err("ValueError: range() arg 3 must not be zero".into());
    }
    Ok((start, stop, step))
}

pub fn range_len(start: i64, stop: i64, step: i64) -> u64 {
    let (span, step) = if step > 0 {
        (stop as i128 - start as i128, step as i128)
    } else {
        (start as i128 - stop as i128, -(step as i128))
    };
    if span <= 0 {
        0
    } else {
        ((span + step - 1) / step).min(u64::MAX as i128) as u64
    }
}

pub fn math_constant(name: &str) -> R<Value> {
    Ok(Value::Float(match name {
        "pi" => std::f64::consts::PI,
        "e" => std::f64::consts::E,
        "tau" => std::f64::consts::TAU,
        "inf" => f64::INFINITY,
        "nan" => f64::NAN,
        _ => {
            return Err(format!(
                "AttributeError: module 'math' has no attribute '{name}'"
            ))
        }
    }))
}

fn domain_error() -> String {
    "ValueError: math domain error".into()
}

pub fn math_call(name: &str, args: &[Value]) -> R<Value> {
    let f1 = |args: &[Value]| -> R<f64> {
        arity(name, args, 1, 1)?;
        Ok(number(name, &args[0])?.f())
    };
    match name {
        "sqrt" => {
            let x = f1(args)?;
            if x < 0.0 {
                return Err(domain_error());
            }
            Ok(Value::Float(x.sqrt()))
        }
        "floor" | "ceil" | "trunc" => {
            arity(name, args, 1, 1)?;
            match number(name, &args[0])? {
                Num::Int(i) => Ok(Value::Int(i)),
                Num::Float(f) => {
                    let r = match name {
                        "floor" => f.floor(),
                        "ceil" => f.ceil(),
                        _ => f.trunc(),
                    };
                    Ok(Value::Int(float_to_int(r)?))
                }
            }
        }
        "fabs" => Ok(Value::Float(f1(args)?.abs())),
        "exp" => {
            let v = f1(args)?.exp();
            if v.is_infinite() {
                return Err("OverflowError: math range error".into());
            }
            Ok(Value::Float(v))
        }
        "log" => {
            arity(name, args, 1, 2)?;
            let x = number(name, &args[0])?.f();
            if x <= 0.0 {
                return Err(domain_error());
            }
            match args.get(1) {
                None => Ok(Value::Float(x.ln())),
                Some(b) => {
                    let b = number(name, b)?.f();
                    if b <= 0.0 || b == 1.0 {
                        return Err(domain_error());
                    }
                    Ok(Value::Float(x.ln() / b.ln()))
                }
            }
        }
        "log2" | "log10" => {
            let x = f1(args)?;
            if x <= 0.0 {
                return Err(domain_error());
            }
            Ok(Value::Float(if name == "log2" { x.log2() } else { x.log10() }))
        }
        "sin" => Ok(Value::Float(f1(args)?.sin())),
        "cos" => Ok(Value::Float(f1(args)?.cos())),
        "tan" => Ok(Value::Float(f1(args)?.tan())),
        "pow" => {
            arity(name, args, 2, 2)?;
            float_op("**", number(name, &args[0])?.f(), number(name, &args[1])?.f())
        }
        "isqrt" => {
            arity(name, args, 1, 1)?;
            let n = int_arg(name, &args[0])?;
            if n < 0 {
                return Err("ValueError: isqrt() argument must be nonnegative".into());
            }
            let mut r = (n as f64).sqrt() as i64;
            while r.checked_mul(r).is_none_or(|sq| sq > n) {
                r -= 1;
            }
            while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
                r += 1;
            }
            Ok(Value::Int(r))
        }
        "gcd" | "lcm" => {
            let mut acc: i64 = if name == "gcd" { 0 } else { 1 };
            for a in args {
                let b = int_arg(name, a)?.checked_abs().ok_or_else(overflow)?;
                let g = gcd(acc, b);
                acc = if name == "gcd" {
                    g
                } else if b == 0 || acc == 0 {
                    0
                } else {
                    (acc / g).checked_mul(b).ok_or_else(overflow)?
                };
            }
            Ok(Value::Int(acc))
        }
        "factorial" => {
            arity(name, args, 1, 1)?;
            let n = int_arg(name, &args[0])?;
            if n < 0 {
                return Err("ValueError: factorial() not defined for negative values".into());
            }
            let mut acc: i64 = 1;
            for k in 2..=n {
                acc = acc.checked_mul(k).ok_or_else(overflow)?;
            }
            Ok(Value::Int(acc))
        }
        "comb" | "perm" => {
            arity(name, args, 2, 2)?;
            let n = int_arg(name, &args[0])?;
            let k = int_arg(name, &args[1])?;
            if n < 0 || k < 0 {
                return Err(format!("ValueError: {name}() arguments must be nonnegative"));
            }
            if k > n {
                return Ok(Value::Int(0));
            }
            let mut acc: i128 = 1;
            if name == "comb" {
                let k = k.min(n - k);
                for i in 0..k {
                    acc = acc * (n - i) as i128 / (i + 1) as i128;
                    if acc > i64::MAX as i128 {
                        return Err(overflow());
                    }
                }
            } else {
                for i in 0..k {
                    acc *= (n - i) as i128;
                    if acc > i64::MAX as i128 {
                        return Err(overflow());
                    }
                }
            }
            Ok(Value::Int(acc as i64))
        }
        _ => Err(format!(
            "AttributeError: module 'math' has no attribute '{name}'"
        )),
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
