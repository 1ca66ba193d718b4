"""Builders for the bundled example models (returned as model-file dicts).

``test1`` is a unit cube with a horizontal slab inclusion, ``test2`` the same
cube with a vertical slab against one side, and ``test3`` a lined circular
opening in an infinite domain.
"""
from __future__ import annotations

import json
from importlib import resources

import numpy as np

LINEAR = [0.0, 0.0, 1.0, 1.0]
BUNDLED = {
    "test1_d02": dict(ratio=2.0, d=0.2),
    "test1_d01": dict(ratio=4.0, d=0.1),
    "test1_d005": dict(ratio=8.0, d=0.05),
    "test1_d0025": dict(ratio=8.0, d=0.025),
}


def _bilinear(p00, p10, p01, p11) -> dict:
    """Linear surface; u runs p00 -> p10, v runs p00 -> p01."""
    return {"degree": [1, 1], "knots_u": LINEAR, "knots_v": LINEAR,
            "control": [list(map(float, p)) for p in (p00, p10, p01, p11)]}


def _cube_faces(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)):
    """Six faces of a box with outward normals ``xu x xv``, keyed by name."""
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    c = {(i, j, k): (x1 if i else x0, y1 if j else y0, z1 if k else z0)
         for i in (0, 1) for j in (0, 1) for k in (0, 1)}
    return {
        "bottom": _bilinear(c[0, 0, 0], c[0, 1, 0], c[1, 0, 0], c[1, 1, 0]),
        "top": _bilinear(c[0, 0, 1], c[1, 0, 1], c[0, 1, 1], c[1, 1, 1]),
        "front": _bilinear(c[0, 0, 0], c[1, 0, 0], c[0, 0, 1], c[1, 0, 1]),
        "back": _bilinear(c[0, 1, 0], c[0, 1, 1], c[1, 1, 0], c[1, 1, 1]),
        "left": _bilinear(c[0, 0, 0], c[0, 0, 1], c[0, 1, 0], c[0, 1, 1]),
        "right": _bilinear(c[1, 0, 0], c[1, 1, 0], c[1, 0, 1], c[1, 1, 1]),
    }


def _vertical_dir(surface) -> str | None:
    P = np.array(surface["control"])
    du, dv = P[1] - P[0], P[2] - P[0]
    if abs(du[2]) > 0.5 * np.linalg.norm(du):
        return "u"
    if abs(dv[2]) > 0.5 * np.linalg.norm(dv):
        return "v"
    return None


def _flat_square(z, lo=(0.0, 0.0), hi=(1.0, 1.0)) -> dict:
    (a, b), (c, d) = (lo[0], hi[0]), (lo[1], hi[1])
    return _bilinear((a, c, z), (b, c, z), (a, d, z), (b, d, z))


def _lagrange(points=(0.0, 1.0)) -> dict:
    return {"family": "lagrange", "points": list(points)}


def _cube_outputs(top_point, line_n=21):
    return {"points": [{"name": "top", "x": list(top_point)}],
            "lines": [{"name": "axis", "start": [0.5, 0.5, 0.0], "end": [0.5, 0.5, 1.0], "n": line_n}]}


def test1(ratio: float = 2.0, d: float = 0.2, E: float = 10.0, option: int = 2,
          z_mid: float = 0.5) -> dict:
    """Unit cube, base fixed, unit tension on top, slab inclusion across the section."""
    zb, zt = z_mid - 0.5 * d, z_mid + 0.5 * d
    faces = _cube_faces()
    patches = []
    for name, surf in faces.items():
        p = {"kind": "finite", "name": name, "surface": surf}
        vd = _vertical_dir(surf)
        if vd:
            # C0 lines where the inclusion meets the side faces
            p["insert_" + vd] = [zb, zt]
        if name == "bottom":
            p["bc"] = {"kinds": ["u", "u", "u"], "values": [0.0, 0.0, 0.0]}
        elif name == "top":
            p["bc"] = {"kinds": ["t", "t", "t"], "values": [0.0, 0.0, 1.0]}
        patches.append(p)
    inc = {"name": "slab", "bottom": _flat_square(zb), "top": _flat_square(zt),
           "material": {"E": ratio * E, "nu": 0.0},
           "interp": [_lagrange(), _lagrange(), _lagrange()], "sigma": "constant"}
    return {"name": f"test1 E1/E={ratio:g} d={d:g}", "material": {"E": E, "nu": 0.0},
            "patches": patches, "inclusions": [inc],
            "solve": {"integration_option": option},
            "outputs": _cube_outputs((0.5, 0.5, 1.0))}


def cube_patch_test(E: float = 10.0, nu: float = 0.0) -> dict:
    """Homogeneous cube under uniaxial tension (no inclusion)."""
    doc = test1(E=E)
    doc["name"] = "patch test"
    doc["material"] = {"E": E, "nu": nu}
    doc["inclusions"] = []
    for p in doc["patches"]:
        p.pop("insert_u", None)
        p.pop("insert_v", None)
    return doc


def _axis_of(surface, direction: str) -> int:
    P = np.array(surface["control"])
    v = P[1] - P[0] if direction == "u" else P[2] - P[0]
    return int(np.argmax(np.abs(v)))


def test2(ratio: float = 2.0, d: float = 0.2, E: float = 10.0, option: int = 2) -> dict:
    """Unit cube with a vertical slab ``x < d`` of the stiffer material; load parallel to it.

    The boundary has 10 linear patches (the four faces cut by the slab are
    split in two).  The unknown field is elevated to quadratic order in the
    two horizontal directions; the narrow strips over the slab stay linear
    across their width, which gives 24 collocation points (72 DOF).
    """
    boxes = {"inc": ((0.0, 0.0, 0.0), (d, 1.0, 1.0)), "rest": ((d, 0.0, 0.0), (1.0, 1.0, 1.0))}
    patches = []
    for part, (lo, hi) in boxes.items():
        for name, surf in _cube_faces(lo, hi).items():
            if (part == "inc" and name == "right") or (part == "rest" and name == "left"):
                continue  # internal interface
            elev = []
            for direction in ("u", "v"):
                ax = _axis_of(surf, direction)
                elev.append(int(ax == 1 or (ax == 0 and part == "rest")))
            p = {"kind": "finite", "name": f"{name}_{part}", "surface": surf, "elevate": elev}
            if name == "bottom":
                p["bc"] = {"kinds": ["u", "u", "u"], "values": [0.0, 0.0, 0.0]}
            elif name == "top":
                p["bc"] = {"kinds": ["t", "t", "t"], "values": [0.0, 0.0, 1.0]}
            patches.append(p)

    def wall(x):
        # s along y, t along z, r across the slab
        return _bilinear((x, 0, 0), (x, 1, 0), (x, 0, 1), (x, 1, 1))
    inc = {"name": "wall", "bottom": wall(0.0), "top": wall(d),
           "material": {"E": ratio * E, "nu": 0.0},
           "interp": [_lagrange((0.0, 0.5, 1.0)), _lagrange(), _lagrange()],
           "sigma": "constant"}
    return {"name": f"test2 E1/E={ratio:g} d={d:g}", "material": {"E": E, "nu": 0.0},
            "patches": patches, "inclusions": [inc], "solve": {"integration_option": option},
            "outputs": {"points": [], "lines": [
                {"name": "top_profile", "start": [0.0, 0.5, 1.0], "end": [1.0, 0.5, 1.0], "n": 21}]}}


# -- Test 3 -----------------------------------------------------------------
W45 = float(np.sqrt(0.5))


def _quarter_arc(R, k):
    """Control points of quarter ``k`` (0..3) of a circle of radius R in the xy plane."""
    a = 0.5 * np.pi * k
    c, s = np.cos(a), np.sin(a)
    rot = np.array([[c, -s], [s, c]])
    pts = rot @ np.array([[R, 0.0], [R, R], [0.0, R]]).T
    return pts.T


def _circle(R):
    """Full circle as a C0 quadratic NURBS with 4 spans (9 control points)."""
    P = np.vstack([_quarter_arc(R, k)[:2] for k in range(4)] + [_quarter_arc(R, 0)[:1]])
    w = np.array([1.0, W45] * 4 + [1.0])
    knots = [0.0, 0.0, 0.0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1.0, 1.0, 1.0]
    return P, w, knots


def test3(R: float = 5.0, d: float = 0.5, ratio: float = 2.0, E: float = 10.0,
          p_i: float = 1.0, half_length: float | None = None, option: int = 2,
          axial_knots=(0.5,), far: float | None = None) -> dict:
    """Pressurised circular opening with a lining in an infinite domain.

    The opening surface over ``|z| <= half_length`` (default ``2 R``) is a
    finite cylinder patch, refined along z at ``axial_knots``; beyond it
    infinite patches in +z and -z carry displacements that stay constant
    along the axis.  The lining occupies ``R <= r <= R + d`` over the same
    length and is discretised as one inclusion per half ring, NURBS in the
    circumferential direction, piecewise linear along z and linear through
    the thickness.
    """
    L = 2.0 * R if half_length is None else half_length
    far = 2.0 * L if far is None else far
    ax = [float(k) for k in axial_knots]
    P, w, knots = _circle(R)
    n = len(P)
    patches = []
    # finite cylinder, u circumferential, v along z; xu x xv points away from
    # the hole, so the normal is flipped to point out of the domain
    ctrl = [[*P[i], z] for z in (-L, L) for i in range(n)]
    patches.append({"kind": "finite", "name": "opening",
                    "surface": {"degree": [2, 1], "knots_u": knots, "knots_v": LINEAR,
                                "control": ctrl, "weights": list(w) * 2},
                    "insert_v": ax, "flip": True, "bc": {"pressure": p_i}})
    for sgn, name in ((1, "upper"), (-1, "lower")):
        p1 = [[*P[i], sgn * L] for i in range(n)]
        p2 = [[*P[i], sgn * far] for i in range(n)]
        patches.append({"kind": "infinite", "name": name, "degree": 2, "knots": knots,
                        "p1": p1, "p2": p2, "weights": list(w), "flip": sgn > 0,
                        "bc": {"pressure": p_i}})
    incs = []
    ro = R + d
    kn = [0.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.0]
    ws = [1.0, W45, 1.0, W45, 1.0]
    kz = [0.0, 0.0] + ax + [1.0, 1.0]
    for h in range(2):
        k0 = 2 * h
        Ps = np.vstack([_quarter_arc(1.0, k0)[:2], _quarter_arc(1.0, k0 + 1)])

        def surf(rad):
            return {"degree": [2, 1], "knots_u": kn, "knots_v": LINEAR,
                    "control": [[*(rad * Ps[i]), z] for z in (-L, L) for i in range(5)],
                    "weights": ws * 2}
        incs.append({"name": f"lining{h}", "bottom": surf(R), "top": surf(ro),
                     "material": {"E": ratio * E, "nu": 0.0},
                     "interp": [{"family": "nurbs", "degree": 2, "knots": kn, "weights": ws},
                                {"family": "nurbs", "degree": 1, "knots": kz},
                                _lagrange()],
                     "sigma": "linear"})
    radii = [R, R + d, 7.0, 10.0, 15.0]
    th = 0.3  # off the patch seams
    return {"name": f"test3 R={R:g} d={d:g} E1/E={ratio:g}", "material": {"E": E, "nu": 0.0},
            "infinite": True, "patches": patches, "inclusions": incs,
            "solve": {"integration_option": option},
            "outputs": {"points": [{"name": f"r={r:g}", "x": [r * np.cos(th), r * np.sin(th), 0.0]}
                                   for r in radii],
                        "lines": [{"name": "radial", "start": [R * np.cos(th), R * np.sin(th), 0.0],
                                   "end": [15.0 * np.cos(th), 15.0 * np.sin(th), 0.0], "n": 21}]}}


def thick_cylinder_kirsch(r, R=5.0, d=0.5, E=10.0, ratio=2.0, p_i=1.0):
    """Plane-strain (nu = 0) radial displacement of the lined opening, and p_o."""
    E1 = ratio * E
    Ro = R + d
    p_o = 2 * E * R**2 * p_i / (E * (R**2 + Ro**2) + E1 * (Ro**2 - R**2))
    r = np.asarray(r, float)
    # thick cylinder: u = A r + B / r with sigma_r(R) = -p_i, sigma_r(Ro) = -p_o
    A = (p_i * R**2 - p_o * Ro**2) / (E1 * (Ro**2 - R**2))
    B = (p_i - p_o) * R**2 * Ro**2 / (E1 * (Ro**2 - R**2))
    inner = A * r + B / r
    outer = p_o * Ro**2 / (E * r)
    return np.where(r <= Ro, inner, outer), p_o


def test1_theory(ratio: float, d: float, E: float = 10.0) -> float:
    return ((1.0 / ratio - 1.0) * d + 1.0) / E


def bundled_path(name: str):
    return resources.files("igabem") / "data" / f"{name}.json"


def load_bundled(name: str) -> dict:
    return json.loads(bundled_path(name).read_text())


def write_bundled(directory) -> list:
    from pathlib import Path
    out = []
    docs = {k: test1(**v) for k, v in BUNDLED.items()}
    docs["test2"] = test2()
    docs["test3"] = test3()
    docs["patchtest"] = cube_patch_test()
    for k, doc in docs.items():
        p = Path(directory) / f"{k}.json"
        p.write_text(json.dumps(doc, indent=1) + "\n")
        out.append(p)
    return out
