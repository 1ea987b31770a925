"""Scene files (TOML/JSON) and the built-in example catalog."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # py310
    import tomli as tomllib

from .expr import (
    Const,
    INFTY,
    MeroExpr,
    ParseError,
    ZVAR,
    ipow,
    is_infinity,
    parse_expr,
    ppow,
    to_string,
)
from .surface import (
    BryantData,
    IntrinsicData,
    SurfaceSpec,
    SurfaceError,
    WeierstrassData,
)


class SceneError(Exception):
    pass


@dataclass
class Scene:
    name: str
    surface: SurfaceSpec
    params: dict = field(default_factory=dict)
    R_schedule: tuple = (5.0, 10.0, 20.0)
    h_schedule: tuple = (0.25, 0.125, 0.0625)
    tol: float = 1e-9
    spectral_ok: bool = True          # complete metric data for index runs
    note: str = ""


def _parse_point(s: str):
    s = s.strip()
    if s in ("inf", "Inf", "INF", "oo", "infinity"):
        return INFTY
    try:
        e = parse_expr(s)
    except ParseError as exc:
        raise SceneError(f"bad point {s!r}: {exc}") from exc
    if not isinstance(e, Const):
        raise SceneError(f"point {s!r} is not a constant")
    return e.value


def _point_str(p) -> str:
    if is_infinity(p):
        return "inf"
    z = complex(p)
    def num(x):
        return f"{int(x)}" if float(x).is_integer() else repr(x)
    if z.imag == 0:
        return num(z.real)
    if z.real == 0:
        return f"{num(z.imag)}i"
    sign = "+" if z.imag >= 0 else "-"
    return f"{num(z.real)} {sign} {num(abs(z.imag))}i"


def scene_from_dict(doc: dict, name: str = "") -> Scene:
    try:
        surf = doc["surface"]
        topology = surf.get("topology", "sphere")
        params = {k: float(v) for k, v in doc.get("params", {}).items()}
        data_doc = surf.get("data", {})
        kind = data_doc.get("kind", "weierstrass")
        if kind == "weierstrass":
            data = WeierstrassData(g=parse_expr(data_doc["g"], params),
                                   eta=parse_expr(data_doc["eta"], params))
        elif kind == "bryant":
            g = parse_expr(data_doc["g"], params)
            fsrc = data_doc.get("f", "solve")
            sigma = (parse_expr(data_doc["sigma"], params)
                     if "sigma" in data_doc else None)
            if fsrc == "solve":
                if sigma is None:
                    raise SceneError("bryant data with f='solve' needs sigma")
                data = BryantData(f=None, g=g, sigma=sigma)
                # f filled in below once the SurfaceSpec exists
            else:
                data = BryantData(f=parse_expr(fsrc, params), g=g, sigma=sigma)
        elif kind == "intrinsic":
            data = IntrinsicData(
                conformal_factor=float(data_doc.get("conformal_factor", 1.0)),
                sigma_const=complex(_parse_point(str(data_doc.get("sigma", "0")))))
        else:
            raise SceneError(f"unknown data kind {kind!r}")
        punctures = tuple(_parse_point(str(p)) for p in surf.get("punctures", []))
        marked = tuple(_parse_point(str(p)) for p in surf.get("marked_points", []))
        lattice = tuple(_parse_point(str(p)) for p in
                        surf.get("lattice", ["1", "1i"]))
        spec = SurfaceSpec(topology=topology, data=data, punctures=punctures,
                           marked_points=marked, lattice=lattice,
                           sidedness=surf.get("sidedness", "two"))
        if kind == "bryant" and data.f is None:
            from .represent import SolvedMap, _generic_base
            from .schwarzian import schwarzian
            q = schwarzian(data.g, ZVAR).coeff - data.sigma
            data.f = SolvedMap(q, _generic_base(spec), surface=spec)
        analysis = doc.get("analysis", {})
        return Scene(name=doc.get("name", name),
                     surface=spec, params=params,
                     R_schedule=tuple(analysis.get("R", (5.0, 10.0, 20.0))),
                     h_schedule=tuple(analysis.get("h", (0.25, 0.125, 0.0625))),
                     tol=float(analysis.get("tol", 1e-9)),
                     spectral_ok=bool(doc.get("spectral_ok", True)),
                     note=doc.get("note", ""))
    except KeyError as exc:
        raise SceneError(f"scene is missing field {exc}") from exc


def load_scene(path_or_name: str) -> Scene:
    """Load a scene file (.toml/.json) or a built-in catalog entry."""
    p = Path(path_or_name)
    if p.exists():
        if p.suffix == ".json":
            doc = json.loads(p.read_text())
        else:
            doc = tomllib.loads(p.read_text())
        return scene_from_dict(doc, name=p.stem)
    return catalog_scene(path_or_name)


def scene_to_toml(scene: Scene) -> str:
    """Serialize a scene; numeric (solved) f is written as f = 'solve'."""
    s = scene.surface
    lines = [f'name = "{scene.name}"', ""]
    lines.append("[surface]")
    lines.append(f'topology = "{s.topology}"')
    lines.append(f'sidedness = "{s.sidedness}"')
    if s.topology == "sphere":
        pts = ", ".join(f'"{_point_str(p)}"' for p in s.punctures)
        lines.append(f"punctures = [{pts}]")
        if s.marked_points:
            pts = ", ".join(f'"{_point_str(p)}"' for p in s.marked_points)
            lines.append(f"marked_points = [{pts}]")
    else:
        lines.append(f'lattice = ["{_point_str(s.lattice[0])}", '
                     f'"{_point_str(s.lattice[1])}"]')
    lines.append("")
    lines.append("[surface.data]")
    d = s.data
    lines.append(f'kind = "{d.kind}"')
    if d.kind == "weierstrass":
        lines.append(f'g = "{to_string(d.g)}"')
        lines.append(f'eta = "{to_string(d.eta)}"')
    elif d.kind == "bryant":
        lines.append(f'g = "{to_string(d.g)}"')
        if isinstance(d.f, MeroExpr):
            lines.append(f'f = "{to_string(d.f)}"')
        else:
            lines.append('f = "solve"')
        lines.append(f'sigma = "{to_string(d.sigma)}"')
    else:
        lines.append(f"conformal_factor = {d.conformal_factor}")
    if scene.params:
        lines.append("")
        lines.append("[params]")
        for k, v in scene.params.items():
            lines.append(f"{k} = {v}")
    lines.append("")
    lines.append("[analysis]")
    lines.append(f"R = [{', '.join(str(x) for x in scene.R_schedule)}]")
    lines.append(f"h = [{', '.join(str(x) for x in scene.h_schedule)}]")
    lines.append(f"tol = {scene.tol}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Built-in catalog
# ---------------------------------------------------------------------------

def plane_scene() -> Scene:
    spec = SurfaceSpec("sphere", WeierstrassData(g=Const(0j), eta=Const(1 + 0j)),
                       punctures=(INFTY,))
    return Scene("plane", spec, note="flat plane: g = 0, eta = dz")


def horosphere_scene() -> Scene:
    spec = SurfaceSpec("sphere", IntrinsicData(conformal_factor=1.0, sigma_const=0j),
                       punctures=(INFTY,))
    return Scene("horosphere", spec,
                 note="totally umbilic Bryant surface; flat intrinsic data")


def torus_scene(w1: complex = 1.0 + 0j, w2: complex = 1j) -> Scene:
    spec = SurfaceSpec("torus", IntrinsicData(conformal_factor=1.0, sigma_const=0j),
                       lattice=(w1, w2))
    return Scene("torus", spec, note="flat square torus, constant data")


def catenoid_scene() -> Scene:
    spec = SurfaceSpec("sphere", WeierstrassData(g=ZVAR, eta=ipow(ZVAR, -2)),
                       punctures=(0j, INFTY))
    return Scene("catenoid", spec, note="g = z, eta = dz/z^2")


def enneper_scene() -> Scene:
    spec = SurfaceSpec("sphere", WeierstrassData(g=ZVAR, eta=Const(1 + 0j)),
                       punctures=(INFTY,))
    return Scene("enneper", spec, note="g = z, eta = dz")


def scherk_scene() -> Scene:
    spec = SurfaceSpec("sphere",
                       WeierstrassData(g=ZVAR, eta=parse_expr("(1 - z^4)^-1")),
                       punctures=(1 + 0j, -1 + 0j, 1j, -1j))
    return Scene("scherk", spec,
                 note="Scherk doubly periodic quotient: 4 order-1 ends")


def cousin_scene(mu: float = 0.5) -> Scene:
    """Catenoid cousin: Bryant annulus with f = 1/z, g = z^(-2 mu - 1),
    sigma = -2 mu (mu+1) z^-2; framed iff 2 mu is a positive integer."""
    if mu <= -0.5 or mu == 0:
        raise SceneError("cousin parameter must satisfy mu > -1/2, mu != 0")
    expo = -2.0 * mu - 1.0
    g = ipow(ZVAR, int(expo)) if float(expo).is_integer() else ppow(ZVAR, expo)
    sigma = Const(complex(-2.0 * mu * (mu + 1.0))) * ipow(ZVAR, -2)
    data = BryantData(f=ipow(ZVAR, -1), g=g, sigma=sigma)
    spec = SurfaceSpec("sphere", data, punctures=(0j, INFTY))
    framed = float(2 * mu).is_integer() and 2 * mu > 0
    return Scene("cousin", spec, params={"mu": mu},
                 R_schedule=(10.0, 20.0, 40.0),
                 spectral_ok=framed,
                 note="catenoid cousin family")


def uy72_scene(mu: float = 2.0) -> Scene:
    """g(z) = ((z-1)/(z+1))^mu (z-mu)/(z+mu) on C minus {-1, 1}; framed iff
    mu is an integer outside {0, +-1}.  Framedness-only scene (no complete
    metric data is supplied by the source family)."""
    if mu in (0.0, 1.0, -1.0):
        raise SceneError("mu must avoid {0, +1, -1}")
    base = (ZVAR - Const(1 + 0j)) / (ZVAR + Const(1 + 0j))
    g = ppow(base, mu) * ((ZVAR - Const(complex(mu))) / (ZVAR + Const(complex(mu))))
    data = WeierstrassData(g=g, eta=Const(1 + 0j))
    spec = SurfaceSpec("sphere", data, punctures=(-1 + 0j, 1 + 0j))
    return Scene("uy72", spec, params={"mu": mu}, spectral_ok=False,
                 note="framedness example; eta is a placeholder")


def uy73_scene(mu: float = 2.0, m: int = 3) -> Scene:
    """g(z) = z^mu (z^m + a)/(a z^m + 1), a = (mu+m)/(mu-m); framed iff mu is
    an integer outside {0, +-1, +-m}.  Framedness-only scene."""
    if mu in (0.0, 1.0, -1.0, float(m), float(-m)):
        raise SceneError("mu must avoid {0, +-1, +-m}")
    a = (mu + m) / (mu - m)
    num = ipow(ZVAR, m) + Const(complex(a))
    den = Const(complex(a)) * ipow(ZVAR, m) + Const(1 + 0j)
    g = ppow(ZVAR, mu) * num / den
    poles = np.roots([a] + [0.0] * (m - 1) + [1.0])
    punctures = (0j,) + tuple(complex(r) for r in poles)
    data = WeierstrassData(g=g, eta=Const(1 + 0j))
    spec = SurfaceSpec("sphere", data, punctures=punctures)
    return Scene("uy73", spec, params={"mu": mu, "m": float(m)},
                 spectral_ok=False,
                 note="framedness example; eta is a placeholder")


_CATALOG = {
    "plane": plane_scene,
    "horosphere": horosphere_scene,
    "torus": torus_scene,
    "catenoid": catenoid_scene,
    "enneper": enneper_scene,
    "scherk": scherk_scene,
    "cousin": cousin_scene,
    "uy72": uy72_scene,
    "uy73": uy73_scene,
}


def catalog_names():
    return sorted(_CATALOG)


def catalog_scene(name: str, **kwargs) -> Scene:
    """Built-in scene by name; parametric names accept 'cousin:mu=0.5' or
    keyword arguments."""
    base, _, argstr = name.partition(":")
    if base not in _CATALOG:
        raise SceneError(f"unknown scene {name!r}; known: {', '.join(catalog_names())}")
    kw = dict(kwargs)
    if argstr:
        for item in argstr.split(","):
            k, _, v = item.partition("=")
            kw[k.strip()] = float(v)
    if base == "uy73" and "m" in kw:
        kw["m"] = int(kw["m"])
    sc = _CATALOG[base](**kw)
    if argstr:
        sc.name = name
    return sc


def cousin_frame(mu: float):
    """The closed-form null lift F of the catenoid cousin and its
    Maurer-Cartan form, for regression against finite differences:

        F^-1 dF = mu(mu+1)/(2mu+1) [[1/z, -z^(-2mu-2)], [z^(2mu), -1/z]] dz.
    """
    from .moebius import Mat2
    c = 1.0 / math.sqrt(2 * mu + 1)

    def F(z: complex) -> Mat2:
        return Mat2(c * np.array(
            [[(mu + 1) * z ** mu, mu * z ** (-(mu + 1))],
             [mu * z ** (mu + 1), (mu + 1) * z ** (-mu)]], dtype=complex))

    def maurer_cartan(z: complex) -> np.ndarray:
        cc = mu * (mu + 1) / (2 * mu + 1)
        return cc * np.array([[1.0 / z, -z ** (-2 * mu - 2)],
                              [z ** (2 * mu), -1.0 / z]], dtype=complex)

    return F, maurer_cartan
