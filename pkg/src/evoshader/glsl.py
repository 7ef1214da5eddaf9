"""Turn raw LLM output into a renderable fragment shader.

The pipeline has four stages, each usable on its own:

    sanitize            strip markdown fences and surrounding prose
    wrap_interface      inject the standard uniforms and a forwarding main()
    structural_validate cheap structural checks (length, balance, entry point)
    compile_check       optional real compilation via a pluggable backend

``validate_candidate`` chains all four and returns a single report, which
is what the evolution loop and the seed loader use.
"""

from __future__ import annotations

import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

# Names every wrapped shader exposes to the renderer.
UNIFORM_NAMES = ("iTime", "iResolution", "u_audio")

_UNIFORM_DECLS = {
    "iTime": "uniform float iTime;",
    "iResolution": "uniform vec2 iResolution;",
    "u_audio": "uniform float u_audio;",
}

_PRECISION_DIRECTIVE = "precision mediump float;"

_FORWARDING_MAIN = """void main() {
    vec4 color = vec4(0.0);
    mainImage(color, gl_FragCoord.xy);
    gl_FragColor = color;
}"""

# Constructs rejected at the structural stage: the renderer binds no
# textures, and the wrapper owns the profile directive.
BANNED_CONSTRUCTS = ("sampler2D", "samplerCube", "#version")

_TYPE_KEYWORDS = frozenset(
    """
    void float int uint bool
    vec2 vec3 vec4 ivec2 ivec3 ivec4 bvec2 bvec3 bvec4 uvec2 uvec3 uvec4
    mat2 mat3 mat4 struct
    uniform const precision attribute varying in out inout
    highp mediump lowp
    """.split()
)

_CONTROL_KEYWORDS = frozenset(
    "if else for while do switch return break continue discard".split()
)

_FENCE_RE = re.compile(r"^```[\w+#. -]*$")
# return-type(s) + identifier + '(' at the start of a line, e.g.
# "void mainImage(" or "float noise(vec2 p)".
_FUNC_DEF_RE = re.compile(r"^\s*([A-Za-z_]\w*)(?:\s+[A-Za-z_]\w*)+\s*\(")


class GlslError(Exception):
    """Base class for pipeline errors."""


class SanitizeError(GlslError):
    """Raised when no GLSL-like content can be extracted."""


class WrapError(GlslError):
    """Raised when neither a mainImage nor a main entry point exists."""


class CompileBackendUnavailable(GlslError):
    """Raised when no real compiler is reachable on this host."""


@dataclass(frozen=True)
class SanitizedShader:
    code: str
    removed_prefix_lines: int = 0
    removed_fences: bool = False


@dataclass(frozen=True)
class WrappedShader:
    full_source: str
    entry: str


@dataclass(frozen=True)
class ValidationLimits:
    max_code_length: int = 8000
    required_entry: str = "mainImage"


@dataclass
class ValidationReport:
    ok: bool
    stage_failed: str = "none"  # none | sanitize | structure | length | compile
    diagnostics: list[str] = field(default_factory=list)
    code_length: int = 0

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "stage_failed": self.stage_failed,
            "diagnostics": list(self.diagnostics),
            "code_length": self.code_length,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ValidationReport:
        return cls(
            ok=d["ok"],
            stage_failed=d["stage_failed"],
            diagnostics=list(d["diagnostics"]),
            code_length=d["code_length"],
        )


# ------------------------------------------------------------------
# comment-aware scanning helpers
# ------------------------------------------------------------------

def _comment_mask(text: str) -> list[bool]:
    """True for every index inside a // or /* */ comment (GLSL: no nesting)."""
    mask = [False] * len(text)
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "/" and i + 1 < n:
            nxt = text[i + 1]
            if nxt == "/":
                j = text.find("\n", i)
                j = n if j == -1 else j
                for k in range(i, j):
                    mask[k] = True
                i = j
                continue
            if nxt == "*":
                j = text.find("*/", i + 2)
                j = n if j == -1 else j + 2
                for k in range(i, j):
                    mask[k] = True
                i = j
                continue
        i += 1
    return mask


def strip_comments(text: str) -> str:
    mask = _comment_mask(text)
    return "".join(c for c, m in zip(text, mask) if not m)


def _looks_like_glsl_line(line: str) -> bool:
    stripped = line.strip()
    if not stripped:
        return False
    if stripped.startswith(("#", "//", "/*")):
        return True
    first = re.match(r"[A-Za-z_]\w*|\S", stripped)
    token = first.group(0) if first else ""
    if token in _TYPE_KEYWORDS:
        return True
    if token in _CONTROL_KEYWORDS:
        return False
    m = _FUNC_DEF_RE.match(stripped)
    return bool(m) and m.group(1) not in _CONTROL_KEYWORDS


def _is_fence_line(line: str) -> bool:
    return bool(_FENCE_RE.match(line.strip()))


def _last_toplevel_function_close(text: str) -> int | None:
    """Index of the '}' closing the last top-level function, or None.

    A "function" is a line matching the definition pattern while brace
    depth is zero. Returns None when its opening brace never balances
    (truncated output is left for the validator to reject).
    """
    mask = _comment_mask(text)
    depth = 0
    line_start = 0
    last_def = -1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line_start = i + 1
        elif not mask[i]:
            if c == "{":
                depth += 1
            elif c == "}":
                depth = max(0, depth - 1)
        if i == line_start and depth == 0:
            line_end = text.find("\n", i)
            line_end = n if line_end == -1 else line_end
            line = text[i:line_end]
            if not mask[i] and _looks_like_glsl_line(line):
                m = _FUNC_DEF_RE.match(line.strip())
                if m and m.group(1) not in _CONTROL_KEYWORDS:
                    last_def = i
        i += 1
    if last_def == -1:
        return None
    # match the first opening brace after the definition
    depth = 0
    opened = False
    for j in range(last_def, n):
        if mask[j]:
            continue
        c = text[j]
        if c == "{":
            depth += 1
            opened = True
        elif c == "}":
            depth -= 1
            if opened and depth == 0:
                return j
    return None


# ------------------------------------------------------------------
# sanitize
# ------------------------------------------------------------------

def sanitize(raw: str) -> SanitizedShader:
    """Extract shader code from raw LLM text.

    Strips an outer markdown fence pair (language tag allowed), drops
    leading lines until one starts with a GLSL token, trims prose and
    blank lines after the closing brace of the last top-level function,
    and removes any leftover fence-marker lines. Idempotent.
    """
    if not raw or not raw.strip():
        raise SanitizeError("empty input")

    lines = raw.splitlines(keepends=True)
    removed_fences = False

    first = _first_nonblank(lines)
    if first is not None and _is_fence_line(lines[first]):
        del lines[first]
        removed_fences = True
    last = _last_nonblank(lines)
    if last is not None and _is_fence_line(lines[last]):
        del lines[last:]
        removed_fences = True

    removed_prefix = 0
    while lines and not _looks_like_glsl_line(lines[0]):
        if _is_fence_line(lines[0]):
            removed_fences = True
        del lines[0]
        removed_prefix += 1
    if not lines:
        raise SanitizeError("no GLSL content found")

    text = "".join(lines)
    close = _last_toplevel_function_close(text)
    if close is not None:
        head_end = text.find("\n", close)
        if head_end == -1:
            head_end = len(text)
        else:
            head_end += 1
        tail_lines = text[head_end:].splitlines(keepends=True)
        # Stray braces in the tail are kept so the validator sees them.
        while (
            tail_lines
            and not _looks_like_glsl_line(tail_lines[-1])
            and not any(b in tail_lines[-1] for b in "{}")
        ):
            if _is_fence_line(tail_lines[-1]):
                removed_fences = True
            tail_lines.pop()
        text = text[:head_end] + "".join(tail_lines)

    kept = []
    for line in text.splitlines(keepends=True):
        if _is_fence_line(line):
            removed_fences = True
            continue
        kept.append(line)
    text = "".join(kept)

    if not text.strip():
        raise SanitizeError("no GLSL content found")
    return SanitizedShader(
        code=text,
        removed_prefix_lines=removed_prefix,
        removed_fences=removed_fences,
    )


def _first_nonblank(lines: list[str]) -> int | None:
    for i, line in enumerate(lines):
        if line.strip():
            return i
    return None


def _last_nonblank(lines: list[str]) -> int | None:
    for i in range(len(lines) - 1, -1, -1):
        if lines[i].strip():
            return i
    return None


# ------------------------------------------------------------------
# wrap
# ------------------------------------------------------------------

_MAIN_IMAGE_RE = re.compile(
    r"void\s+mainImage\s*\(([^)]*)\)", re.DOTALL
)
_MAIN_RE = re.compile(r"void\s+main\s*\(\s*(void)?\s*\)")


def _declared_uniforms(code_no_comments: str) -> set[str]:
    found = set()
    for name in UNIFORM_NAMES:
        if re.search(rf"uniform\s+[^;]*\b{name}\b[^;]*;", code_no_comments):
            found.add(name)
    return found


def wrap_interface(shader: SanitizedShader | str) -> WrappedShader:
    """Assemble the complete fragment source around the user code.

    Prepends a default float precision directive when none exists,
    declares each standard uniform exactly once (skipping any the code
    already declares), and appends a main() forwarding to mainImage
    unless the code brings its own main.
    """
    code = shader.code if isinstance(shader, SanitizedShader) else shader
    bare = strip_comments(code)

    has_main = bool(_MAIN_RE.search(bare))
    m = _MAIN_IMAGE_RE.search(bare)
    has_main_image = False
    if m:
        params = m.group(1)
        has_main_image = "vec4" in params and "vec2" in params
    if not has_main_image and not has_main:
        raise WrapError("no mainImage(out vec4, in vec2) or main() entry point")

    parts = []
    if not re.search(r"precision\s+\w+\s+float\s*;", bare):
        parts.append(_PRECISION_DIRECTIVE)
    present = _declared_uniforms(bare)
    for name in UNIFORM_NAMES:
        if name not in present:
            parts.append(_UNIFORM_DECLS[name])
    parts.append("")
    parts.append(code.rstrip("\n"))
    if not has_main:
        parts.append("")
        parts.append(_FORWARDING_MAIN)
    full = "\n".join(parts) + "\n"
    return WrappedShader(full_source=full, entry="main" if has_main else "mainImage")


# ------------------------------------------------------------------
# structural validation
# ------------------------------------------------------------------

_OPENERS = {"{": "}", "(": ")", "[": "]"}
_CLOSERS = {v: k for k, v in _OPENERS.items()}


def _check_balance(code_no_comments: str) -> str | None:
    stack: list[str] = []
    for c in code_no_comments:
        if c in _OPENERS:
            stack.append(c)
        elif c in _CLOSERS:
            if not stack or stack[-1] != _CLOSERS[c]:
                return f"unbalanced '{c}'"
            stack.pop()
    if stack:
        return f"unclosed '{stack[-1]}'"
    return None


def structural_validate(
    wrapped: WrappedShader, limits: ValidationLimits | None = None
) -> ValidationReport:
    """Cheap structural checks, in order: length, bracket balance,
    exactly one main, entry-point presence, banned constructs.
    Failures are reported, never raised."""
    limits = limits or ValidationLimits()
    source = wrapped.full_source
    report = ValidationReport(ok=True, code_length=len(source))

    if len(source) > limits.max_code_length:
        report.ok = False
        report.stage_failed = "length"
        report.diagnostics.append(
            f"code length {len(source)} exceeds cap {limits.max_code_length}"
        )
        return report

    bare = strip_comments(source)

    problem = _check_balance(bare)
    if problem:
        return _structure_fail(report, problem)

    main_defs = len(re.findall(r"void\s+main\s*\(\s*(?:void)?\s*\)", bare))
    if main_defs != 1:
        return _structure_fail(report, f"expected exactly one main, found {main_defs}")

    entry = limits.required_entry
    if wrapped.entry != "main":
        if not re.search(rf"void\s+{re.escape(entry)}\s*\(", bare):
            return _structure_fail(report, f"entry point {entry} not defined")

    for construct in BANNED_CONSTRUCTS:
        if construct in bare:
            return _structure_fail(report, f"banned construct {construct!r}")

    return report


def _structure_fail(report: ValidationReport, message: str) -> ValidationReport:
    report.ok = False
    report.stage_failed = "structure"
    report.diagnostics.append(message)
    return report


# ------------------------------------------------------------------
# compile check
# ------------------------------------------------------------------

class CompileBackend(Protocol):
    def compile(self, full_source: str) -> tuple[bool, list[str]]: ...


class AcceptingBackend:
    """Stub that accepts everything; used in tests and headless runs."""

    def compile(self, full_source: str) -> tuple[bool, list[str]]:
        return True, []


class RejectingBackend:
    """Stub that rejects everything with a fixed diagnostic."""

    def __init__(self, diagnostic: str = "rejected by stub backend"):
        self.diagnostic = diagnostic

    def compile(self, full_source: str) -> tuple[bool, list[str]]:
        return False, [self.diagnostic]


class NativeBackend:
    """Real offscreen compilation when the host provides a compiler.

    Probes for glslangValidator, then for a standalone moderngl context.
    Construction fails with CompileBackendUnavailable when neither
    exists, signalling the caller to degrade to structural-only checks.
    """

    def __init__(self):
        self._validator = shutil.which("glslangValidator")
        self._ctx = None
        if self._validator is None:
            try:
                import moderngl  # noqa: F401 deferred, optional

                self._ctx = moderngl.create_context(standalone=True)
            except Exception as exc:
                raise CompileBackendUnavailable(
                    f"no compile backend: glslangValidator missing, moderngl: {exc}"
                ) from exc

    def compile(self, full_source: str) -> tuple[bool, list[str]]:
        if self._validator:
            with tempfile.NamedTemporaryFile("w", suffix=".frag", delete=False) as f:
                f.write(full_source)
                path = f.name
            try:
                proc = subprocess.run(
                    [self._validator, path], capture_output=True, text=True
                )
                ok = proc.returncode == 0
                diags = [
                    line
                    for line in (proc.stdout + proc.stderr).splitlines()
                    if line.strip() and not line.startswith(path)
                ]
                return ok, diags
            finally:
                Path(path).unlink(missing_ok=True)
        try:
            import moderngl

            self._ctx.program(
                vertex_shader=(
                    "#version 330\nin vec2 in_vert;\n"
                    "void main(){ gl_Position = vec4(in_vert, 0.0, 1.0); }"
                ),
                fragment_shader=full_source,
            )
            return True, []
        except moderngl.Error as exc:
            return False, [str(exc)]


def compile_check(
    wrapped: WrappedShader, backend: CompileBackend
) -> ValidationReport:
    """Delegate to the backend; merges its diagnostics into the report."""
    ok, diagnostics = backend.compile(wrapped.full_source)
    return ValidationReport(
        ok=ok,
        stage_failed="none" if ok else "compile",
        diagnostics=diagnostics,
        code_length=len(wrapped.full_source),
    )


# ------------------------------------------------------------------
# full pipeline
# ------------------------------------------------------------------

@dataclass
class CandidateResult:
    report: ValidationReport
    sanitized: SanitizedShader | None = None
    wrapped: WrappedShader | None = None


def validate_candidate(
    raw: str,
    limits: ValidationLimits | None = None,
    backend: CompileBackend | None = None,
) -> CandidateResult:
    """sanitize -> wrap -> structural checks -> optional compile check.

    A missing or unavailable backend degrades to the structural result;
    the degradation is noted in the diagnostics.
    """
    limits = limits or ValidationLimits()
    try:
        sanitized = sanitize(raw)
    except SanitizeError as exc:
        return CandidateResult(
            ValidationReport(ok=False, stage_failed="sanitize", diagnostics=[str(exc)])
        )
    try:
        wrapped = wrap_interface(sanitized)
    except WrapError as exc:
        return CandidateResult(
            ValidationReport(
                ok=False,
                stage_failed="structure",
                diagnostics=[str(exc)],
                code_length=len(sanitized.code),
            ),
            sanitized,
        )
    report = structural_validate(wrapped, limits)
    if not report.ok:
        return CandidateResult(report, sanitized, wrapped)
    if backend is not None:
        try:
            compiled = compile_check(wrapped, backend)
        except CompileBackendUnavailable as exc:
            report.diagnostics.append(f"compile skipped: {exc}")
        else:
            if not compiled.ok:
                return CandidateResult(compiled, sanitized, wrapped)
            report.diagnostics.extend(compiled.diagnostics)
    return CandidateResult(report, sanitized, wrapped)
