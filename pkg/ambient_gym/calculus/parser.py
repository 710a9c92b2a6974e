"""
Reader and printer for the `.ba` model format.

    group G { stay: H, Univ; cross: H; }
    name a : amb(G)
    name h : cap(ea, {G}, {H})
    name c : ch(group G)
    system a[ enter h.0 ] | (new k : ch(group G)) b[ local k!{a} ]

`#` starts a line comment. Operators, loosest first: restriction (scopes
to the right), `|`, `+`, then the prefix operators `.` and `!`.
"""
import re
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

from .syntax import (
    UNIV, Ambient, ArgType, CapOp, CapPrefix, CapType, ChanType, Direction, ExError, Flavor,
    GroupDecl, GroupTable, GroupType, Input, Kind, Label, MergeError, Name, Output, Par,
    Process, Repl, Restrict, Sum, Warn, Zero, flavor_of, kind_of, pretty_type,
)
from .typesystem import TypeEnv

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z][A-Za-z0-9_+'-]*)
  | (?P<zero>0(?![0-9]))
  | (?P<punct>[{}()\[\];:,.|+!?])
""", re.VERBOSE)

PROCESS_KEYWORDS = {op.value: op for op in CapOp}
DIRECTIONS = {d.value: d for d in Direction}
RESERVED = set(PROCESS_KEYWORDS) | set(DIRECTIONS) | {'new', 'system', 'group', 'name'}


class ParseError(Exception):
    LEXICAL = 'lexical'
    SYNTACTIC = 'syntactic'
    MIXED_SUM = 'mixed_sum'
    UNDECLARED = 'undeclared'
    DUPLICATE = 'duplicate'

    def __init__(self, line, column, message, kind):
        super(ParseError, self).__init__('{}:{}: {} ({})'.format(line, column, message, kind))
        self.line = line
        self.column = column
        self.message = message
        self.kind = kind


@dataclass(frozen=True)
class Token(object):
    kind: str
    text: str
    line: int
    column: int


@dataclass(frozen=True)
class Model(object):
    groups: GroupTable
    env: TypeEnv
    system: Process


def tokenize(source: str) -> List[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        match = _TOKEN.match(source, pos)
        if match is None:
            raise ParseError(line, pos - line_start + 1,
                             'unexpected character {!r}'.format(source[pos]), ParseError.LEXICAL)
        kind = match.lastgroup
        text = match.group()
        if kind not in ('ws', 'comment'):
            tokens.append(Token(kind, text, line, pos - line_start + 1))
        newlines = text.count('\n')
        if newlines:
            line += newlines
            line_start = pos + text.rindex('\n') + 1
        pos = match.end()
    tokens.append(Token('eof', '', line, pos - line_start + 1))
    return tokens


class _Parser(object):

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0
        self.group_refs = []  # (group, token) to resolve once every group is read
        self.scopes = []  # stack of {text: Name} for restriction and input binders
        self.env = TypeEnv()
        self.groups = GroupTable()

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset=1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def error(self, message, kind=ParseError.SYNTACTIC, token=None):
        token = token or self.tok
        return ParseError(token.line, token.column, message, kind)

    def at(self, text) -> bool:
        return self.tok.kind != 'eof' and self.tok.text == text

    def advance(self) -> Token:
        token = self.tok
        self.pos += 1
        return token

    def expect(self, text) -> Token:
        if not self.at(text):
            raise self.error('expected {!r}, found {!r}'.format(text, self.tok.text or 'end of input'))
        return self.advance()

    def ident(self, what) -> Token:
        if self.tok.kind != 'ident' or self.tok.text in RESERVED:
            raise self.error('expected {}, found {!r}'.format(what, self.tok.text or 'end of input'))
        return self.advance()

    # -- declarations -------------------------------------------------------

    def model(self) -> Model:
        decls = []
        seen = set()
        while self.at('group'):
            decl, token = self.group_decl()
            if decl.name in seen or decl.name == UNIV:
                raise self.error('group {} declared twice'.format(decl.name), ParseError.DUPLICATE, token)
            seen.add(decl.name)
            decls.append(decl)
        self.groups = GroupTable(decls)
        for group, token in self.group_refs:
            if group not in self.groups:
                raise self.error('unknown group {}'.format(group), ParseError.UNDECLARED, token)
        while self.at('name'):
            self.name_decl()
        self.expect('system')
        system = self.process()
        if self.tok.kind != 'eof':
            raise self.error('unexpected {!r} after the system process'.format(self.tok.text))
        return Model(self.groups, self.env, system)

    def group_decl(self) -> Tuple[GroupDecl, Token]:
        self.expect('group')
        token = self.ident('group name')
        stay, cross = None, None
        if self.at('{'):
            self.advance()
            if self.at('stay'):
                self.advance()
                self.expect(':')
                stay = self.gid_list()
                self.expect(';')
            if self.at('cross'):
                self.advance()
                self.expect(':')
                cross = self.gid_list()
                self.expect(';')
            self.expect('}')
        if stay is None:
            stay = frozenset([UNIV])
        if cross is None:
            cross = stay
        return GroupDecl(token.text, stay, cross), token

    def gid_list(self):
        groups = [self.gid()]
        while self.at(','):
            self.advance()
            groups.append(self.gid())
        return frozenset(groups)

    def gid(self) -> str:
        token = self.ident('group name')
        self.group_refs.append((token.text, token))
        return token.text

    def checked_gid(self) -> str:
        token = self.ident('group name')
        if token.text not in self.groups:
            raise self.error('unknown group {}'.format(token.text), ParseError.UNDECLARED, token)
        return token.text

    def name_decl(self):
        self.expect('name')
        token = self.ident('name')
        self.expect(':')
        annot = self.type_expr()
        if Name(token.text) in self.env:
            raise self.error('name {} declared twice'.format(token.text), ParseError.DUPLICATE, token)
        self.env = self.env.extend(Name(token.text, kind_of(annot)), annot)

    def type_expr(self) -> ArgType:
        if self.at('amb'):
            self.advance()
            self.expect('(')
            group = self.checked_gid()
            self.expect(')')
            return GroupType(group)
        if self.at('cap'):
            self.advance()
            self.expect('(')
            label_token = self.ident('label')
            try:
                label = Label(label_token.text)
            except ValueError:
                raise self.error('unknown label {!r}'.format(label_token.text), token=label_token)
            self.expect(',')
            movers = self.braced_groups()
            self.expect(',')
            hosts = self.braced_groups()
            self.expect(')')
            return CapType(movers, hosts, label)
        if self.at('ch'):
            self.advance()
            self.expect('(')
            payload = self.arg_type()
            self.expect(')')
            return ChanType(payload)
        raise self.error('expected a type, found {!r}'.format(self.tok.text or 'end of input'))

    def arg_type(self) -> ArgType:
        if self.at('group'):
            self.advance()
            return GroupType(self.checked_gid())
        return self.type_expr()

    def braced_groups(self):
        self.expect('{')
        groups = [self.checked_gid()]
        while self.at(','):
            self.advance()
            groups.append(self.checked_gid())
        self.expect('}')
        return frozenset(groups)

    # -- names in scope -----------------------------------------------------

    def resolve(self, token: Token) -> Tuple[Name, Optional[ArgType]]:
        for scope in reversed(self.scopes):
            if token.text in scope:
                return scope[token.text]
        name = Name(token.text)
        if name in self.env:
            t = self.env[name]
            return Name(token.text, kind_of(t)), t
        raise self.error('undeclared name {}'.format(token.text), ParseError.UNDECLARED, token)

    def lookup(self, token: Token) -> Name:
        return self.resolve(token)[0]

    def bind(self, token: Token, t: Optional[ArgType]) -> Name:
        name = Name(token.text, kind_of(t) if t is not None else Kind.CHANNEL)
        self.scopes.append({token.text: (name, t)})
        return name

    # -- processes ----------------------------------------------------------

    def process(self) -> Process:
        if self.at('(') and self.peek().text == 'new':
            return self.restriction()
        parts = [self.choice()]
        while self.at('|'):
            self.advance()
            if self.at('(') and self.peek().text == 'new':
                parts.append(self.restriction())
                break
            parts.append(self.choice())
        return parts[0] if len(parts) == 1 else Par(tuple(parts))

    def restriction(self) -> Restrict:
        self.expect('(')
        self.expect('new')
        token = self.ident('name')
        self.expect(':')
        annot = self.type_expr()
        self.expect(')')
        name = self.bind(token, annot)
        try:
            body = self.process()
        finally:
            self.scopes.pop()
        return Restrict(name, annot, body)

    def choice(self) -> Process:
        start = self.tok
        operands = [self.operand()]
        while self.at('+'):
            self.advance()
            operands.append(self.operand())
        if len(operands) == 1:
            return operands[0]
        branches = []
        for operand in operands:
            if not isinstance(operand, Sum):
                raise self.error('choice branches must start with a prefix', token=start)
            branches.extend(operand.branches)
        flavors = {flavor_of(prefix) for prefix, _ in branches}
        if len(flavors) > 1:
            raise self.error('a choice mixes capability and communication branches',
                             ParseError.MIXED_SUM, start)
        return Sum(tuple(branches), flavors.pop())

    def operand(self) -> Process:
        token = self.tok
        if token.kind == 'zero':
            self.advance()
            return Zero()
        if self.at('!'):
            self.advance()
            return Repl(self.operand())
        if self.at('('):
            if self.peek().text == 'new':
                return self.restriction()
            self.advance()
            inner = self.process()
            self.expect(')')
            return inner
        if token.kind == 'ident' and token.text in PROCESS_KEYWORDS:
            return self.cap_branch()
        if token.kind == 'ident' and token.text in DIRECTIONS:
            return self.comm_branch()
        if token.kind == 'ident' and self.peek().text == '[':
            return self.ambient()
        if token.kind == 'eof':
            raise self.error('unexpected end of input')
        raise self.error('unexpected {!r}'.format(token.text))

    def ambient(self) -> Ambient:
        token = self.ident('ambient name')
        name = self.lookup(token)
        self.expect('[')
        body = Zero() if self.at(']') else self.process()
        self.expect(']')
        return Ambient(name, body)

    def continuation(self) -> Process:
        if self.at('.'):
            self.advance()
            return self.operand()
        return Zero()

    def cap_branch(self) -> Sum:
        op = PROCESS_KEYWORDS[self.advance().text]
        name = self.lookup(self.ident('capability name'))
        prefix = CapPrefix(op, name)
        return Sum(((prefix, self.continuation()),), Flavor.CAPABILITY)

    def comm_branch(self) -> Sum:
        direction = DIRECTIONS[self.advance().text]
        channel, channel_type = self.resolve(self.ident('channel name'))
        if self.at('!'):
            self.advance()
            self.expect('{')
            payload = self.lookup(self.ident('name'))
            self.expect('}')
            prefix = Output(direction, channel, payload)
            return Sum(((prefix, self.continuation()),), Flavor.COMMUNICATION)
        if self.at('?'):
            self.advance()
            self.expect('{')
            token = self.ident('binder')
            self.expect('}')
            payload_type = channel_type.payload if isinstance(channel_type, ChanType) else None
            binder = self.bind(token, payload_type)
            try:
                cont = self.continuation()
            finally:
                self.scopes.pop()
            return Sum(((Input(direction, channel, binder), cont),), Flavor.COMMUNICATION)
        raise self.error("expected '!' or '?' after the channel")


def parse_model(source: str) -> Model:
    """Parse a `.ba` source text. Raises ParseError, and only ParseError."""
    try:
        return _Parser(tokenize(source)).model()
    except ParseError:
        raise
    except (RecursionError, ValueError, KeyError, IndexError) as exc:
        raise ParseError(1, 1, 'malformed model: {}'.format(exc), ParseError.SYNTACTIC)


def parse_process(source: str, env: TypeEnv, groups: GroupTable) -> Process:
    """Parse a bare process against an existing declaration context."""
    parser = _Parser(tokenize(source))
    parser.env = env
    parser.groups = groups
    try:
        result = parser.process()
    except RecursionError as exc:
        raise ParseError(1, 1, 'malformed process: {}'.format(exc), ParseError.SYNTACTIC)
    if parser.tok.kind != 'eof':
        raise parser.error('unexpected {!r}'.format(parser.tok.text))
    return result


# -- printing ---------------------------------------------------------------

_PAR, _SUM, _OPERAND = 0, 1, 2


def _groups(groups) -> str:
    return ', '.join(sorted(groups))


def pretty_prefix(prefix) -> str:
    if isinstance(prefix, CapPrefix):
        return '{} {}'.format(prefix.op.value, prefix.name)
    if isinstance(prefix, Output):
        return '{} {}!{{{}}}'.format(prefix.direction.value, prefix.channel, prefix.payload)
    return '{} {}?{{{}}}'.format(prefix.direction.value, prefix.channel, prefix.binder)


def _wrap(text, needed):
    return '({})'.format(text) if needed else text


def _pretty(p: Process, level: int) -> str:
    if isinstance(p, Zero):
        return '0'
    if isinstance(p, Par):
        return _wrap(' | '.join(_pretty(c, _SUM) for c in p.components), level > _PAR)
    if isinstance(p, Sum):
        text = ' + '.join(
            '{}.{}'.format(pretty_prefix(prefix), _pretty(cont, _OPERAND)) for prefix, cont in p.branches)
        return _wrap(text, level > _SUM and len(p.branches) > 1)
    if isinstance(p, Repl):
        return '!' + _pretty(p.body, _OPERAND)
    if isinstance(p, Ambient):
        return '{}[ {} ]'.format(p.name, _pretty(p.body, _PAR))
    if isinstance(p, Restrict):
        text = '(new {} : {}) {}'.format(p.name, pretty_type(p.annot), _pretty(p.body, _PAR))
        return _wrap(text, level > _PAR)
    if isinstance(p, Warn):
        return '#warn({})'.format(p.group)
    if isinstance(p, ExError):
        return '#exerror({},{})'.format(p.host, p.mover)
    if isinstance(p, MergeError):
        return '#merror({},{})'.format(p.host, p.content)
    raise ValueError('not a process: {!r}'.format(p))


def pretty_group(decl: GroupDecl) -> str:
    text = 'group {} {{ stay: {};'.format(decl.name, _groups(decl.stay))
    if decl.cross != decl.stay:
        text += ' cross: {};'.format(_groups(decl.cross))
    return text + ' }'


def pretty(m: Union[Model, Process]) -> str:
    if not isinstance(m, Model):
        return _pretty(m, _PAR)
    lines = [pretty_group(decl) for decl in m.groups]
    for name, t in m.env.items():
        lines.append('name {} : {}'.format(name, pretty_type(t)))
    lines.append('system {}'.format(_pretty(m.system, _PAR)))
    return '\n'.join(lines) + '\n'
