"""Net and solver description files: lexer, parser, AST, validator, serializer.

The dialect is a strict subset of nested key/value text configs:

    name: "mnist"
    input: "data"
    layer {
      name: "conv1"
      type: "Convolution"
      bottom: "data"
      top: "conv1"
      convolution_param {
        num_output: 8
        kernel_size: 5
      }
    }

Scalar entries are ``key: value`` with string, number, or bare enum values;
scopes are ``key { ... }``; ``#`` starts a line comment.  All parse entry
points return ``(result, diagnostics)`` where ``result`` is None iff at least
one error-severity diagnostic was produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

__all__ = [
    "Span",
    "Diagnostic",
    "LayerSpec",
    "NetSpec",
    "SolverConfig",
    "DeployError",
    "LAYER_KINDS",
    "parse_net",
    "serialize_net",
    "parse_solver",
    "serialize_solver",
    "derive_deploy",
    "completion_context",
]

LAYER_KINDS = (
    "Data",
    "Convolution",
    "Pooling",
    "InnerProduct",
    "ReLU",
    "SoftmaxWithLoss",
    "Softmax",
    "Accuracy",
)

# param block name per layer kind; kinds missing here take no param block
PARAM_BLOCKS = {
    "Data": "data_param",
    "Convolution": "convolution_param",
    "Pooling": "pooling_param",
    "InnerProduct": "inner_product_param",
}

# key -> ("int", min) | ("string",) | ("enum", allowed values)
PARAM_KEYS = {
    "data_param": {"source": ("string",), "batch_size": ("int", 1)},
    "convolution_param": {
        "num_output": ("int", 1),
        "kernel_size": ("int", 1),
        "stride": ("int", 1),
        "pad": ("int", 0),
    },
    "pooling_param": {
        "pool": ("enum", ("MAX", "AVE")),
        "kernel_size": ("int", 1),
        "stride": ("int", 1),
        "pad": ("int", 0),
    },
    "inner_product_param": {"num_output": ("int", 1)},
}

REQUIRED_PARAMS = {
    "Convolution": ("num_output", "kernel_size"),
    "Pooling": ("kernel_size",),
    "InnerProduct": ("num_output",),
}

# string-valued param keys, for the serializer
_STRING_PARAMS = {"source"}


@dataclass(frozen=True)
class Span:
    """Half-open source range; lines and columns are 1-based."""

    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    span: Span

    def to_json(self) -> dict:
        return {
            "severity": self.severity,
            "message": self.message,
            "span": {
                "line": self.span.line,
                "col": self.span.col,
                "end_line": self.span.end_line,
                "end_col": self.span.end_col,
            },
        }


@dataclass
class LayerSpec:
    name: str
    kind: str
    bottoms: list[str] = field(default_factory=list)
    tops: list[str] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    span: Span | None = field(default=None, compare=False, repr=False)

    def param(self, key, default=None):
        return self.params.get(key, default)

    @property
    def kernel_size(self) -> int:
        return self.params["kernel_size"]

    @property
    def stride(self) -> int:
        return self.params.get("stride", 1)

    @property
    def pad(self) -> int:
        return self.params.get("pad", 0)

    @property
    def num_output(self) -> int:
        return self.params["num_output"]

    @property
    def pool_method(self) -> str:
        return self.params.get("pool", "MAX")


@dataclass
class NetSpec:
    name: str = ""
    inputs: list[str] = field(default_factory=list)
    layers: list[LayerSpec] = field(default_factory=list)

    def layer(self, name: str) -> LayerSpec:
        for lay in self.layers:
            if lay.name == name:
                return lay
        raise KeyError(name)


@dataclass
class SolverConfig:
    base_lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0
    lr_policy: str = "fixed"
    gamma: float = 0.1
    step_size: int = 1000
    max_epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    snapshot_every: int = 0


class DeployError(ValueError):
    """A training net cannot be turned into a deploy net."""


# ---------------------------------------------------------------------------
# lexer


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT NUMBER STRING COLON LBRACE RBRACE
    text: str
    value: object
    span: Span


class _LexError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | set("0123456789")
_NUM_START = set("0123456789+-.")


def _tokenize(source: str, permissive: bool = False) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(source)

    def span_from(l0, c0):
        return Span(l0, c0, line, col)

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
                col += 1
            continue
        l0, c0 = line, col
        if ch == "{":
            i += 1
            col += 1
            tokens.append(_Token("LBRACE", "{", None, span_from(l0, c0)))
            continue
        if ch == "}":
            i += 1
            col += 1
            tokens.append(_Token("RBRACE", "}", None, span_from(l0, c0)))
            continue
        if ch == ":":
            i += 1
            col += 1
            tokens.append(_Token("COLON", ":", None, span_from(l0, c0)))
            continue
        if ch == '"':
            i += 1
            col += 1
            buf = []
            closed = False
            while i < n:
                c = source[i]
                if c == "\n":
                    break
                if c == "\\" and i + 1 < n and source[i + 1] in '"\\':
                    buf.append(source[i + 1])
                    i += 2
                    col += 2
                    continue
                if c == '"':
                    i += 1
                    col += 1
                    closed = True
                    break
                buf.append(c)
                i += 1
                col += 1
            if not closed and not permissive:
                raise _LexError(
                    Diagnostic("error", "unterminated string literal", span_from(l0, c0))
                )
            tokens.append(
                _Token("STRING" if closed else "STRING_OPEN", "".join(buf), "".join(buf), span_from(l0, c0))
            )
            continue
        if ch in _IDENT_START:
            j = i
            while j < n and source[j] in _IDENT_CONT:
                j += 1
            text = source[i:j]
            col += j - i
            i = j
            tokens.append(_Token("IDENT", text, text, span_from(l0, c0)))
            continue
        if ch in _NUM_START:
            j = i
            while j < n and source[j] in "0123456789+-.eE":
                j += 1
            text = source[i:j]
            col += j - i
            i = j
            value: object
            try:
                value = int(text)
            except ValueError:
                try:
                    value = float(text)
                except ValueError:
                    if permissive:
                        continue
                    raise _LexError(
                        Diagnostic("error", f"malformed number '{text}'", span_from(l0, c0))
                    ) from None
            tokens.append(_Token("NUMBER", text, value, span_from(l0, c0)))
            continue
        # unknown character
        i += 1
        col += 1
        if not permissive:
            raise _LexError(
                Diagnostic("error", f"unexpected character {ch!r}", span_from(l0, c0))
            )
    return tokens


# ---------------------------------------------------------------------------
# raw entry tree


@dataclass
class _Entry:
    key: str
    key_span: Span
    value: object = None
    value_kind: str | None = None  # "string" | "number" | "ident"
    value_span: Span | None = None
    children: list | None = None  # list[_Entry] for scopes


class _SyntaxError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


def _parse_entries(tokens: list[_Token], source_end: Span) -> list[_Entry]:
    pos = 0

    def peek() -> _Token | None:
        return tokens[pos] if pos < len(tokens) else None

    def fail(message: str, span: Span):
        raise _SyntaxError(Diagnostic("error", message, span))

    def parse_scope(closing_required: bool) -> list[_Entry]:
        nonlocal pos
        entries: list[_Entry] = []
        while True:
            tok = peek()
            if tok is None:
                if closing_required:
                    fail("unbalanced braces: missing '}'", source_end)
                return entries
            if tok.kind == "RBRACE":
                if not closing_required:
                    fail("unbalanced braces: unexpected '}'", tok.span)
                pos += 1
                return entries
            if tok.kind != "IDENT":
                fail(f"expected a key, found {tok.text!r}", tok.span)
            key_tok = tok
            pos += 1
            tok = peek()
            if tok is None:
                fail(f"expected ':' or '{{' after key '{key_tok.text}'", key_tok.span)
            if tok.kind == "LBRACE":
                pos += 1
                children = parse_scope(closing_required=True)
                entries.append(_Entry(key_tok.text, key_tok.span, children=children))
                continue
            if tok.kind != "COLON":
                fail(f"expected ':' or '{{' after key '{key_tok.text}'", tok.span)
            pos += 1
            tok = peek()
            if tok is None:
                fail(f"missing value for key '{key_tok.text}'", key_tok.span)
            if tok.kind == "STRING":
                entry = _Entry(key_tok.text, key_tok.span, tok.value, "string", tok.span)
            elif tok.kind == "NUMBER":
                entry = _Entry(key_tok.text, key_tok.span, tok.value, "number", tok.span)
            elif tok.kind == "IDENT":
                entry = _Entry(key_tok.text, key_tok.span, tok.value, "ident", tok.span)
            else:
                fail(f"invalid value for key '{key_tok.text}'", tok.span)
            pos += 1
            entries.append(entry)

    return parse_scope(closing_required=False)


def _entry_tree(source: str) -> tuple[list[_Entry] | None, list[Diagnostic]]:
    lines = source.split("\n")
    end = Span(len(lines), len(lines[-1]) + 1, len(lines), len(lines[-1]) + 1)
    try:
        tokens = _tokenize(source)
        return _parse_entries(tokens, end), []
    except _LexError as exc:
        return None, [exc.diagnostic]
    except _SyntaxError as exc:
        return None, [exc.diagnostic]


# ---------------------------------------------------------------------------
# net building and validation


class _Collector:
    def __init__(self):
        self.diagnostics: list[Diagnostic] = []

    def error(self, message: str, span: Span):
        self.diagnostics.append(Diagnostic("error", message, span))

    def warn(self, message: str, span: Span):
        self.diagnostics.append(Diagnostic("warning", message, span))

    @property
    def failed(self) -> bool:
        return any(d.severity == "error" for d in self.diagnostics)


def _expect_string(entry: _Entry, out: _Collector) -> str | None:
    if entry.children is not None:
        out.error(f"key '{entry.key}' takes a quoted string, not a scope", entry.key_span)
        return None
    if entry.value_kind != "string":
        out.error(f"key '{entry.key}' expects a quoted string", entry.value_span)
        return None
    return entry.value


def _check_param_value(block: str, entry: _Entry, out: _Collector):
    """Validate one `key: value` inside a param block; returns the value or None."""
    spec = PARAM_KEYS[block].get(entry.key)
    if spec is None:
        out.error(f"unknown key '{entry.key}' in {block}", entry.key_span)
        return None
    if entry.children is not None:
        out.error(f"key '{entry.key}' does not open a scope", entry.key_span)
        return None
    if spec[0] == "int":
        if entry.value_kind != "number" or not isinstance(entry.value, int):
            out.error(f"'{entry.key}' expects an integer", entry.value_span)
            return None
        if entry.value < spec[1]:
            out.error(
                f"'{entry.key}' must be >= {spec[1]}, got {entry.value}", entry.value_span
            )
            return None
        return entry.value
    if spec[0] == "enum":
        if entry.value_kind != "ident" or entry.value not in spec[1]:
            allowed = ", ".join(spec[1])
            out.error(f"'{entry.key}' must be one of {allowed}", entry.value_span)
            return None
        return entry.value
    return _expect_string(entry, out)


def _build_layer(scope: _Entry, out: _Collector) -> LayerSpec | None:
    name = None
    kind = None
    bottoms: list[str] = []
    tops: list[str] = []
    param_scopes: list[_Entry] = []
    seen_scalar: dict[str, Span] = {}

    for entry in scope.children:
        if entry.key in ("name", "type"):
            value = _expect_string(entry, out)
            if value is None:
                continue
            if entry.key in seen_scalar:
                out.warn(f"duplicate key '{entry.key}' (last one wins)", entry.key_span)
            seen_scalar[entry.key] = entry.key_span
            if entry.key == "name":
                name = value
            else:
                kind = value
                kind_span = entry.value_span
        elif entry.key in ("bottom", "top"):
            value = _expect_string(entry, out)
            if value is not None:
                (bottoms if entry.key == "bottom" else tops).append(value)
        elif entry.key.endswith("_param"):
            if entry.children is None:
                out.error(f"'{entry.key}' must open a scope", entry.key_span)
                continue
            param_scopes.append(entry)
        else:
            out.error(f"unknown key '{entry.key}' in layer scope", entry.key_span)

    if name is None:
        out.error("layer is missing a name", scope.key_span)
    if kind is None:
        out.error("layer is missing a type", scope.key_span)
        return None
    if kind not in LAYER_KINDS:
        supported = ", ".join(LAYER_KINDS)
        out.error(f"unsupported layer type '{kind}' (supported: {supported})", kind_span)
        return None

    params: dict = {}
    expected_block = PARAM_BLOCKS.get(kind)
    for pscope in param_scopes:
        if pscope.key != expected_block:
            if expected_block is None:
                out.error(
                    f"layer type '{kind}' takes no param block, found '{pscope.key}'",
                    pscope.key_span,
                )
            else:
                out.error(
                    f"param block '{pscope.key}' is not valid for layer type '{kind}'"
                    f" (expected '{expected_block}')",
                    pscope.key_span,
                )
            continue
        for entry in pscope.children:
            value = _check_param_value(pscope.key, entry, out)
            if value is None:
                continue
            if entry.key in params:
                out.warn(f"duplicate key '{entry.key}' (last one wins)", entry.key_span)
            params[entry.key] = value

    for required in REQUIRED_PARAMS.get(kind, ()):
        if required not in params:
            out.error(
                f"layer '{name}' of type '{kind}' is missing required param '{required}'",
                scope.key_span,
            )

    if name is None:
        return None
    return LayerSpec(name, kind, bottoms, tops, params, span=scope.key_span)


def parse_net(source: str) -> tuple[NetSpec | None, list[Diagnostic]]:
    """Parse a net description.  Returns (spec, diagnostics); spec is None iff
    any error diagnostic was produced."""
    entries, diags = _entry_tree(source)
    if entries is None:
        return None, diags
    out = _Collector()
    spec = NetSpec()
    name_span: Span | None = None
    for entry in entries:
        if entry.key == "name":
            value = _expect_string(entry, out)
            if value is None:
                continue
            if name_span is not None:
                out.warn("duplicate key 'name' (last one wins)", entry.key_span)
            name_span = entry.key_span
            spec.name = value
        elif entry.key == "input":
            value = _expect_string(entry, out)
            if value is None:
                continue
            if value in spec.inputs:
                out.warn(f"input '{value}' declared more than once", entry.key_span)
            else:
                spec.inputs.append(value)
        elif entry.key == "layer":
            if entry.children is None:
                out.error("'layer' must open a scope", entry.key_span)
                continue
            layer = _build_layer(entry, out)
            if layer is not None:
                spec.layers.append(layer)
        else:
            out.error(f"unknown key '{entry.key}' at top level", entry.key_span)

    _validate_net(spec, out)
    if out.failed:
        return None, out.diagnostics
    return spec, out.diagnostics


def _validate_net(spec: NetSpec, out: _Collector):
    seen: dict[str, LayerSpec] = {}
    for layer in spec.layers:
        if layer.name in seen:
            out.error(f"duplicate layer name '{layer.name}'", layer.span)
        else:
            seen[layer.name] = layer
        _check_arity(layer, out)
    available = set(spec.inputs)
    for layer in spec.layers:
        for bottom in layer.bottoms:
            if bottom not in available:
                out.error(
                    f"layer '{layer.name}' consumes blob '{bottom}' that no earlier"
                    " layer produces and no input declares",
                    layer.span,
                )
        available.update(layer.tops)


def _check_arity(layer: LayerSpec, out: _Collector):
    if not layer.tops:
        out.error(f"layer '{layer.name}' declares no top blob", layer.span)
    if layer.kind == "Data":
        if layer.bottoms:
            out.error(f"Data layer '{layer.name}' takes no bottom blobs", layer.span)
        return
    if layer.kind in ("SoftmaxWithLoss", "Accuracy"):
        if len(layer.bottoms) != 2:
            out.error(
                f"layer '{layer.name}' of type '{layer.kind}' needs exactly 2 bottoms"
                f" (scores, labels), got {len(layer.bottoms)}",
                layer.span,
            )
    elif len(layer.bottoms) != 1:
        out.error(
            f"layer '{layer.name}' of type '{layer.kind}' needs exactly 1 bottom,"
            f" got {len(layer.bottoms)}",
            layer.span,
        )


# ---------------------------------------------------------------------------
# serialization


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _format_number(value) -> str:
    if isinstance(value, bool):
        raise TypeError("booleans are not valid config values")
    if isinstance(value, int):
        return str(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {value!r} cannot be serialized")
    return repr(value)


def _format_param(key: str, value) -> str:
    if key in _STRING_PARAMS:
        return _quote(value)
    if isinstance(value, str):
        return value  # enum
    return _format_number(value)


def serialize_net(spec: NetSpec) -> str:
    """Render a NetSpec in canonical form: 2-space indents, one key per line,
    LF endings.  parse_net(serialize_net(s)) is structurally equal to s."""
    lines: list[str] = []
    if spec.name:
        lines.append(f"name: {_quote(spec.name)}")
    for inp in spec.inputs:
        lines.append(f"input: {_quote(inp)}")
    for layer in spec.layers:
        lines.append("layer {")
        lines.append(f"  name: {_quote(layer.name)}")
        lines.append(f"  type: {_quote(layer.kind)}")
        for bottom in layer.bottoms:
            lines.append(f"  bottom: {_quote(bottom)}")
        for top in layer.tops:
            lines.append(f"  top: {_quote(top)}")
        if layer.params:
            block = PARAM_BLOCKS[layer.kind]
            lines.append(f"  {block} {{")
            for key, value in layer.params.items():
                lines.append(f"    {key}: {_format_param(key, value)}")
            lines.append("  }")
        lines.append("}")
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# solver


_SOLVER_KEYS = {
    "base_lr": "float",
    "momentum": "float",
    "weight_decay": "float",
    "lr_policy": "string",
    "gamma": "float",
    "step_size": "int",
    "max_epochs": "int",
    "batch_size": "int",
    "seed": "int",
    "snapshot_every": "int",
}


def _solver_range_error(key: str, value) -> str | None:
    if key == "base_lr" and not value > 0:
        return "base_lr must be > 0"
    if key == "momentum" and not (0 <= value < 1):
        return "momentum must be in [0,1)"
    if key == "weight_decay" and value < 0:
        return "weight_decay must be >= 0"
    if key == "lr_policy" and value not in ("fixed", "step"):
        return "lr_policy must be \"fixed\" or \"step\""
    if key == "gamma" and not (0 < value <= 1):
        return "gamma must be in (0,1]"
    if key == "step_size" and value < 1:
        return "step_size must be >= 1"
    if key == "max_epochs" and value < 0:
        return "max_epochs must be >= 0"
    if key == "batch_size" and value < 1:
        return "batch_size must be >= 1"
    if key == "seed" and not (0 <= value < 2**64):
        return "seed must fit in 64 unsigned bits"
    if key == "snapshot_every" and value < 0:
        return "snapshot_every must be >= 0"
    return None


def parse_solver(source: str) -> tuple[SolverConfig | None, list[Diagnostic]]:
    """Parse a solver file; unset keys take their defaults."""
    entries, diags = _entry_tree(source)
    if entries is None:
        return None, diags
    out = _Collector()
    values: dict = {}
    for entry in entries:
        kind = _SOLVER_KEYS.get(entry.key)
        if kind is None:
            out.error(f"unknown solver key '{entry.key}'", entry.key_span)
            continue
        if entry.children is not None:
            out.error(f"solver key '{entry.key}' takes a value, not a scope", entry.key_span)
            continue
        if kind == "string":
            if entry.value_kind != "string":
                out.error(f"'{entry.key}' expects a quoted string", entry.value_span)
                continue
            value = entry.value
        elif kind == "int":
            if entry.value_kind != "number" or not isinstance(entry.value, int):
                out.error(f"'{entry.key}' expects an integer", entry.value_span)
                continue
            value = entry.value
        else:
            if entry.value_kind != "number":
                out.error(f"'{entry.key}' expects a number", entry.value_span)
                continue
            value = float(entry.value)
        message = _solver_range_error(entry.key, value)
        if message is not None:
            out.error(message, entry.value_span)
            continue
        if entry.key in values:
            out.warn(f"duplicate key '{entry.key}' (last one wins)", entry.key_span)
        values[entry.key] = value
    if out.failed:
        return None, out.diagnostics
    return SolverConfig(**values), out.diagnostics


def serialize_solver(config: SolverConfig) -> str:
    lines = []
    for f in fields(SolverConfig):
        value = getattr(config, f.name)
        if f.name == "lr_policy":
            lines.append(f"lr_policy: {_quote(value)}")
        else:
            lines.append(f"{f.name}: {_format_number(value)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# deploy transformation


def derive_deploy(train: NetSpec) -> NetSpec:
    """Rewrite a training net for inference: Data layers become declared
    inputs, SoftmaxWithLoss becomes Softmax (label bottom dropped), Accuracy
    layers disappear."""
    data_layers = [lay for lay in train.layers if lay.kind == "Data"]
    if not data_layers:
        raise DeployError("nothing to deploy: the net declares no Data layer")
    deploy = NetSpec(name=train.name, inputs=list(train.inputs))
    label_blobs = set()
    for lay in data_layers:
        if lay.tops:
            deploy.inputs.append(lay.tops[0])
        label_blobs.update(lay.tops[1:])
    for lay in train.layers:
        if lay.kind in ("Data", "Accuracy"):
            continue
        if lay.kind == "SoftmaxWithLoss":
            bottoms = [b for b in lay.bottoms if b not in label_blobs]
            deploy.layers.append(
                LayerSpec(lay.name, "Softmax", bottoms, list(lay.tops), dict(lay.params))
            )
        else:
            deploy.layers.append(
                LayerSpec(lay.name, lay.kind, list(lay.bottoms), list(lay.tops), dict(lay.params))
            )
    return deploy


# ---------------------------------------------------------------------------
# completion


_TOP_KEYS = ("input", "layer", "name")
_LAYER_KEYS = (
    "bottom",
    "convolution_param",
    "data_param",
    "inner_product_param",
    "name",
    "pooling_param",
    "top",
    "type",
)
_SCOPE_KEYS = {
    "layer": _LAYER_KEYS,
    "convolution_param": tuple(sorted(PARAM_KEYS["convolution_param"])),
    "pooling_param": tuple(sorted(PARAM_KEYS["pooling_param"])),
    "inner_product_param": tuple(sorted(PARAM_KEYS["inner_product_param"])),
    "data_param": tuple(sorted(PARAM_KEYS["data_param"])),
}
_VALUE_ENUMS = {
    "type": tuple(sorted(LAYER_KINDS)),
    "pool": ("AVE", "MAX"),
}


def _cursor_offset(source: str, cursor: tuple[int, int]) -> int:
    line, col = cursor
    lines = source.split("\n")
    line = max(1, min(line, len(lines)))
    offset = sum(len(text) + 1 for text in lines[: line - 1])
    offset += max(0, min(col - 1, len(lines[line - 1])))
    return offset


def completion_context(source: str, cursor: tuple[int, int]) -> list[str]:
    """Legal keys (or enum values) at the innermost scope enclosing the
    cursor, sorted lexicographically.  Unparseable prefixes fall back to the
    top-level key set."""
    prefix = source[: _cursor_offset(source, cursor)]
    tokens = _tokenize(prefix, permissive=True)

    stack: list[str] = []
    pending_key: str | None = None
    value_key: str | None = None
    for tok in tokens:
        if value_key is not None:
            if tok.kind in ("STRING", "NUMBER", "IDENT", "STRING_OPEN"):
                if tok.kind == "STRING_OPEN":
                    # cursor sits inside an open string literal
                    break
                value_key = None
                continue
            value_key = None
        if tok.kind == "IDENT":
            pending_key = tok.text
        elif tok.kind == "COLON":
            value_key = pending_key
            pending_key = None
        elif tok.kind == "LBRACE":
            stack.append(pending_key or "?")
            pending_key = None
        elif tok.kind == "RBRACE":
            if stack:
                stack.pop()
            pending_key = None
        else:
            pending_key = None

    if value_key is not None:
        return list(_VALUE_ENUMS.get(value_key, ()))
    scope = stack[-1] if stack else None
    if scope is None:
        return list(_TOP_KEYS)
    return list(_SCOPE_KEYS.get(scope, _TOP_KEYS))
