"""Python bindings for the roomenv toolkit."""

from ._roomenv import (
    RoomenvError,
    align_scale_shift,
    chamfer,
    estimate_normals,
    f_score,
    make_preset,
    oracle_envelope,
    read_envelope,
    read_frame,
    render_frame,
    run_cli,
    vmf_density,
)

# Pixel classes in the "visibility" arrays.
NO_LAYOUT, SEEN, UNSEEN = 0, 1, 2


def main(argv=None):
    import sys

    code, out, err = run_cli(list(sys.argv[1:] if argv is None else argv))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


__all__ = [
    "RoomenvError",
    "align_scale_shift",
    "chamfer",
    "estimate_normals",
    "f_score",
    "main",
    "make_preset",
    "oracle_envelope",
    "read_envelope",
    "read_frame",
    "render_frame",
    "run_cli",
    "vmf_density",
    "NO_LAYOUT",
    "SEEN",
    "UNSEEN",
]
