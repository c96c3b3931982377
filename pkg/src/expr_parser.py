"""表达式解析器

单个相空间表达式的词法分析、递归下降语法分析与降级 (lowering)。

文法：
    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('+' | '-') unary | power
    power := base ('^' uint)?
    base  := number | 'i' | symbol | '(' expr ')' | func '(' args ')'

同一棵语法树可以降级为精确对象 (多项式或 ExpPoly) 或 sympy 表达式
(闭式函数)。format_poly 的输出可以被原样读回。
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple, Union

import sympy
from sympy.polys.rings import PolyElement

from closed_form import SYMBOLS, ClosedFormFn, poly_to_sympy
from coeffs import I, PARAMETER_NAMES, RING, coeff_inverse, constant, is_coeff, symbol
from errors import ExprSyntaxError, NonInvertibleConstantTerm, UnknownSymbol, UnsupportedVariant
from phase_algebra import ExpPoly, PhaseFn, moyal_bracket, star

logger = logging.getLogger(__name__)

BUILTIN_SYMBOLS = ("q", "p", "hbar")
IMAGINARY_UNIT = "i"

# 精确函数及其参数个数
EXACT_FUNCTIONS: Dict[str, int] = {"exp": 1, "star": 2, "bracket": 2}
# 只能在闭式中使用的函数
CLOSED_FUNCTIONS: Dict[str, object] = {
    "ln": sympy.log,
    "log": sympy.log,
    "sqrt": sympy.sqrt,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "sinh": sympy.sinh,
    "cosh": sympy.cosh,
    "tanh": sympy.tanh,
}
FUNCTION_ARITY: Dict[str, int] = {**EXACT_FUNCTIONS, **{name: 1 for name in CLOSED_FUNCTIONS}}


# ---------------------------------------------------------------------------
# 词法分析
# ---------------------------------------------------------------------------

class TokenKind(Enum):
    """记号类型"""

    NUMBER = "number"
    IDENT = "identifier"
    OPERATOR = "operator"
    LPAREN = "("
    RPAREN = ")"
    COMMA = ","
    EOF = "end of input"


@dataclass(frozen=True)
class Token:
    """记号，line/col 从 1 开始"""

    kind: TokenKind
    text: str
    line: int
    col: int

    def describe(self) -> str:
        return self.kind.value if self.kind == TokenKind.EOF else self.text


_OPERATORS = "+-*/^"
_PUNCTUATION = {"(": TokenKind.LPAREN, ")": TokenKind.RPAREN, ",": TokenKind.COMMA}


class Tokenizer:
    """逐字符扫描输入，记录行列位置"""

    def __init__(self, text: str):
        self.text = text
        self.cursor = 0
        self.line = 1
        self.col = 1

    def _peek_char(self, offset: int = 0) -> str:
        index = self.cursor + offset
        return self.text[index] if index < len(self.text) else ""

    def _advance(self, count: int = 1) -> str:
        consumed = self.text[self.cursor:self.cursor + count]
        for char in consumed:
            if char == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.cursor += count
        return consumed

    def _skip_whitespace(self) -> None:
        while self._peek_char() and self._peek_char().isspace():
            self._advance()

    def _number(self) -> str:
        start = self.cursor
        while self._peek_char().isdigit():
            self._advance()
        if self._peek_char() == ".":
            self._advance()
            while self._peek_char().isdigit():
                self._advance()
        # 指数部分必须紧跟数字，否则 2E 中的 E 是参数
        if self._peek_char() in ("e", "E"):
            sign = 1 if self._peek_char(1) in ("+", "-") else 0
            if self._peek_char(1 + sign).isdigit():
                self._advance(1 + sign)
                while self._peek_char().isdigit():
                    self._advance()
        return self.text[start:self.cursor]

    def _identifier(self) -> str:
        start = self.cursor
        while self._peek_char() and (self._peek_char().isalnum() or self._peek_char() == "_"):
            self._advance()
        return self.text[start:self.cursor]

    def tokens(self) -> List[Token]:
        """完整的记号序列，以 EOF 结尾"""
        result = []
        while True:
            self._skip_whitespace()
            line, col = self.line, self.col
            char = self._peek_char()
            if not char:
                result.append(Token(TokenKind.EOF, "", line, col))
                return result
            if char.isdigit() or (char == "." and self._peek_char(1).isdigit()):
                result.append(Token(TokenKind.NUMBER, self._number(), line, col))
            elif char.isalpha() or char == "_":
                result.append(Token(TokenKind.IDENT, self._identifier(), line, col))
            elif char in _OPERATORS:
                result.append(Token(TokenKind.OPERATOR, self._advance(), line, col))
            elif char in _PUNCTUATION:
                result.append(Token(_PUNCTUATION[char], self._advance(), line, col))
            else:
                raise ExprSyntaxError(line, col, ["number", "identifier", "operator", "(", ")", ","], char)


# ---------------------------------------------------------------------------
# 语法树
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Imag:
    pass


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Expr", ...]


Expr = Union[Num, Imag, Sym, Neg, BinOp, Pow, Call]


# ---------------------------------------------------------------------------
# 语法分析
# ---------------------------------------------------------------------------

_BASE_START = ["number", "identifier", "i", "("]


class ExprParser:
    """递归下降解析器"""

    def __init__(self, text: str, params: Iterable[str] = ()):
        self.params = frozenset(params)
        for name in self.params:
            if name not in PARAMETER_NAMES:
                raise UnknownSymbol(name, f"不能声明参数 {name}，可用参数: {', '.join(PARAMETER_NAMES)}")
        self.tokens = Tokenizer(text).tokens()
        self.position = 0

    def _peek(self) -> Token:
        return self.tokens[self.position]

    def _next(self) -> Token:
        tok = self.tokens[self.position]
        if tok.kind != TokenKind.EOF:
            self.position += 1
        return tok

    def _fail(self, expected: Iterable[str], tok: Optional[Token] = None):
        tok = tok or self._peek()
        raise ExprSyntaxError(tok.line, tok.col, expected, tok.describe())

    def _expect(self, kind: TokenKind) -> Token:
        if self._peek().kind != kind:
            self._fail([kind.value])
        return self._next()

    def _at_operator(self, *ops: str) -> bool:
        tok = self._peek()
        return tok.kind == TokenKind.OPERATOR and tok.text in ops

    def parse(self) -> Expr:
        """解析整个输入"""
        node = self.expression()
        if self._peek().kind != TokenKind.EOF:
            self._fail(["+", "-", "*", "/", "^", TokenKind.EOF.value])
        return node

    def expression(self) -> Expr:
        node = self.term()
        while self._at_operator("+", "-"):
            op = self._next().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self._at_operator("*", "/"):
            op = self._next().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self._at_operator("-"):
            self._next()
            return Neg(self.unary())
        if self._at_operator("+"):
            self._next()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        node = self.base()
        if self._at_operator("^"):
            self._next()
            tok = self._peek()
            if tok.kind != TokenKind.NUMBER or not tok.text.isdigit():
                self._fail(["non-negative integer"])
            node = Pow(node, int(self._next().text))
        return node

    def base(self) -> Expr:
        tok = self._peek()
        if tok.kind == TokenKind.NUMBER:
            self._next()
            return Num(Fraction(tok.text))
        if tok.kind == TokenKind.LPAREN:
            self._next()
            node = self.expression()
            self._expect(TokenKind.RPAREN)
            return node
        if tok.kind == TokenKind.IDENT:
            self._next()
            return self._identifier(tok)
        self._fail(_BASE_START)

    def _identifier(self, tok: Token) -> Expr:
        name = tok.text
        if self._peek().kind == TokenKind.LPAREN:
            if name not in FUNCTION_ARITY:
                raise UnknownSymbol(name, f"第 {tok.line} 行第 {tok.col} 列: 未知函数 {name}")
            return self._call(name)
        if name in FUNCTION_ARITY:
            self._fail(["("])
        if name == IMAGINARY_UNIT:
            return Imag()
        if name in BUILTIN_SYMBOLS or name in self.params:
            return Sym(name)
        raise UnknownSymbol(name, f"第 {tok.line} 行第 {tok.col} 列: 未声明的符号 {name} (用 --param {name} 声明)")

    def _call(self, name: str) -> Call:
        self._expect(TokenKind.LPAREN)
        arity = FUNCTION_ARITY[name]
        args = [self.expression()]
        while len(args) < arity:
            self._expect(TokenKind.COMMA)
            args.append(self.expression())
        self._expect(TokenKind.RPAREN)
        return Call(name, tuple(args))


def parse(text: str, params: Iterable[str] = ()) -> Expr:
    """解析表达式文本

    Args:
        text: 表达式
        params: 已声明的参数名

    Returns:
        语法树

    Raises:
        ExprSyntaxError: 语法错误，带行列位置和期望的记号集合
        UnknownSymbol: 未声明的符号或未知函数
    """
    return ExprParser(text, params).parse()


# ---------------------------------------------------------------------------
# 降级为精确对象
# ---------------------------------------------------------------------------

def _exp_inverse(value: ExpPoly) -> ExpPoly:
    """c·e^S 的逆 c⁻¹·e^{−S}"""
    if not is_coeff(value.prefactor):
        raise NonInvertibleConstantTerm("只能除以常数乘指数")
    return ExpPoly(coeff_inverse(value.prefactor), -value.phase)


def _divide(left: PhaseFn, right: PhaseFn) -> PhaseFn:
    if isinstance(right, ExpPoly) and not right.is_polynomial():
        return ExpPoly.of(left) * _exp_inverse(right)
    right = right.prefactor if isinstance(right, ExpPoly) else right
    if not is_coeff(right):
        raise NonInvertibleConstantTerm("精确层只能除以系数 (不含 q、p)")
    inverse = coeff_inverse(right)
    return left * inverse


def _power(base: PhaseFn, n: int) -> PhaseFn:
    if isinstance(base, ExpPoly):
        if base.is_polynomial():
            return base.prefactor ** n
        return ExpPoly(base.prefactor ** n, base.phase * n)
    return base ** n


def _simplify(value: PhaseFn) -> PhaseFn:
    """零相位的 ExpPoly 还原为多项式"""
    if isinstance(value, ExpPoly) and value.is_polynomial():
        return value.prefactor
    return value


def to_exact(node: Expr) -> PhaseFn:
    """降级为多项式或 ExpPoly

    Raises:
        NonInvertibleConstantTerm: 除数含 q、p 或不可逆
        UnsupportedVariant: 出现只能在闭式中使用的函数
        UnsupportedProduct: 两个指数多项式的星积
    """
    if isinstance(node, Num):
        return constant(node.value)
    if isinstance(node, Imag):
        return I
    if isinstance(node, Sym):
        return symbol(node.name)
    if isinstance(node, Neg):
        return _simplify(-to_exact(node.operand))
    if isinstance(node, Pow):
        return _simplify(_power(to_exact(node.base), node.exponent))
    if isinstance(node, BinOp):
        left, right = to_exact(node.left), to_exact(node.right)
        mixed = isinstance(left, ExpPoly) or isinstance(right, ExpPoly)
        if node.op == "/":
            return _simplify(_divide(left, right))
        if mixed:
            left = ExpPoly.of(left)
        if node.op == "+":
            return _simplify(left + right)
        if node.op == "-":
            return _simplify(left - right)
        return _simplify(left * right)
    if isinstance(node, Call):
        if node.name in CLOSED_FUNCTIONS:
            raise UnsupportedVariant(f"{node.name} 只能用于闭式函数")
        args = [to_exact(arg) for arg in node.args]
        if node.name == "exp":
            argument = _simplify(args[0])
            if isinstance(argument, ExpPoly):
                raise UnsupportedVariant("exp 的参数必须是多项式")
            return ExpPoly.exp(RING(argument)) if argument else RING.one
        if node.name == "star":
            return _simplify(star(*args))
        return _simplify(moyal_bracket(*args))
    raise TypeError(f"未知的语法树节点: {node!r}")


# ---------------------------------------------------------------------------
# 降级为 sympy 表达式
# ---------------------------------------------------------------------------

def _exact_to_sympy(value: PhaseFn) -> sympy.Expr:
    if isinstance(value, ExpPoly):
        return poly_to_sympy(value.prefactor) * sympy.exp(poly_to_sympy(value.phase))
    return poly_to_sympy(value)


def to_sympy(node: Expr) -> sympy.Expr:
    """降级为 sympy 表达式；star 与 bracket 先在精确层求值"""
    if isinstance(node, Num):
        return sympy.Rational(node.value.numerator, node.value.denominator)
    if isinstance(node, Imag):
        return sympy.I
    if isinstance(node, Sym):
        return SYMBOLS[node.name]
    if isinstance(node, Neg):
        return -to_sympy(node.operand)
    if isinstance(node, Pow):
        return to_sympy(node.base) ** node.exponent
    if isinstance(node, BinOp):
        left, right = to_sympy(node.left), to_sympy(node.right)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return left / right
    if isinstance(node, Call):
        if node.name in CLOSED_FUNCTIONS:
            return CLOSED_FUNCTIONS[node.name](to_sympy(node.args[0]))
        if node.name == "exp":
            return sympy.exp(to_sympy(node.args[0]))
        return _exact_to_sympy(to_exact(node))
    raise TypeError(f"未知的语法树节点: {node!r}")


# ---------------------------------------------------------------------------
# 便捷入口
# ---------------------------------------------------------------------------

def parse_exact(text: str, params: Iterable[str] = ()) -> PhaseFn:
    """解析并降级为精确对象"""
    return to_exact(parse(text, params))


def parse_closed_form(text: str, params: Iterable[str] = ()) -> ClosedFormFn:
    """解析并降级为闭式函数"""
    return ClosedFormFn(to_sympy(parse(text, params)))


def parse_function(text: str, params: Iterable[str] = ()) -> Union[PolyElement, ExpPoly, ClosedFormFn]:
    """优先得到精确对象，精确层无法表示时退回闭式函数"""
    node = parse(text, params)
    try:
        return to_exact(node)
    except (UnsupportedVariant, NonInvertibleConstantTerm) as e:
        logger.debug("%r 不在精确层内 (%s)，按闭式函数处理", text, e)
        return ClosedFormFn(to_sympy(node))
