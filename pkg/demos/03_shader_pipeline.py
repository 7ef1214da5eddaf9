"""Walkthrough: what happens to a raw LLM reply before it can render.

Feeds a deliberately messy response through sanitize -> wrap ->
structural validation, then shows a failure case being caught.

    python demos/03_shader_pipeline.py
"""

from evoshader.glsl import (
    sanitize,
    structural_validate,
    validate_candidate,
    wrap_interface,
)

MESSY_REPLY = """\
Sure! Here's a moodier variant with slower pulses:

```glsl
void mainImage(out vec4 fragColor, in vec2 fragCoord) {
    vec2 uv = fragCoord / iResolution.xy;
    float pulse = 0.5 + 0.5 * sin(iTime * 0.7 + uv.x * 4.0);
    fragColor = vec4(pulse * u_audio, uv.y * 0.4, 0.6, 1.0);
}
```

Let me know if you'd like the palette warmer!
"""

clean = sanitize(MESSY_REPLY)
print(f"sanitize: dropped {clean.removed_prefix_lines} prose line(s), "
      f"fences removed: {clean.removed_fences}")
print(clean.code)

wrapped = wrap_interface(clean)
print(f"wrap: entry point '{wrapped.entry}', "
      f"{len(wrapped.full_source)} chars with uniforms injected")
print("\n".join(wrapped.full_source.splitlines()[:5]), "\n...")

report = structural_validate(wrapped)
print(f"structural checks: ok={report.ok}")

# A truncated reply (classic LLM cutoff) is stopped at the right stage.
broken = validate_candidate("void mainImage(out vec4 c, in vec2 p) {\n    c = vec4(")
print(f"\ntruncated reply -> ok={broken.report.ok}, "
      f"stage={broken.report.stage_failed}, "
      f"diagnostics={broken.report.diagnostics}")
