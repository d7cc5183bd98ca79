"""Exception types shared across the toolkit."""


class HorolabError(Exception):
    """Base class for all horolab errors."""


class UnknownSymbol(HorolabError):
    """A word uses a symbol that is not in the generating set."""


class RadiusCapExceeded(HorolabError):
    """Sphere/ball enumeration would exceed the configured element cap."""


class GeodesicMismatch(HorolabError):
    """Normal forms fail the BFS geodesic cross-check (fatal for user rule systems)."""


class NotStabilized(HorolabError):
    """Two ray truncations disagree on a patch value; the ray is too short."""


class RayNotGeodesic(HorolabError):
    """A ray prefix is not a geodesic normal form."""


class PatchBoundary(HorolabError):
    """A patch value or parent step was requested outside the stored radius."""


class PatchTooSmall(HorolabError):
    """The patch radius cannot support the requested block window or coding depth."""


class NoConvergence(HorolabError):
    """Power iteration failed to converge within the iteration cap."""


class NotInRecurrentCone(HorolabError):
    """The density vector cannot be shifted: no nonnegative solution on the recurrent part."""


class NotATree(HorolabError):
    """A free-group-only check was invoked on a non-free group."""


class RelationViolated(HorolabError):
    """A quotient map or finite action does not respect the group relations."""


class ActionNotTransitive(HorolabError):
    """The finite action is not transitive and is rejected."""


class ConfigInvalid(HorolabError):
    """An experiment configuration failed validation; the message points at the field."""
