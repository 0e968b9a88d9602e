"""Rigid transforms in the 6-real axis-angle layout and 4x4 homogeneous form."""
import numpy as np
from scipy.spatial.transform import Rotation


def rotvec_to_matrix(rotvec) -> np.ndarray:
    return Rotation.from_rotvec(np.array(rotvec, dtype=np.float64)).as_matrix()


def canonical_rotvec(rotvec) -> np.ndarray:
    """Same rotation with angle in [0, pi]."""
    rotvec = np.array(rotvec, dtype=np.float64)
    angle = np.linalg.norm(rotvec)
    if angle <= np.pi:
        return rotvec
    return Rotation.from_rotvec(rotvec).as_rotvec()


def tg_to_matrix(tg) -> np.ndarray:
    tg = np.asarray(tg, dtype=np.float64)
    M = np.eye(4)
    M[:3, :3] = rotvec_to_matrix(tg[:3])
    M[:3, 3] = tg[3:]
    return M


def matrix_to_tg(M: np.ndarray) -> np.ndarray:
    return np.concatenate([Rotation.from_matrix(np.array(M[:3, :3], dtype=np.float64)).as_rotvec(), M[:3, 3]])


def matrix_to_rpy(M: np.ndarray) -> np.ndarray:
    """Fixed-axis roll/pitch/yaw, the URDF origin convention."""
    return Rotation.from_matrix(np.array(M[:3, :3], dtype=np.float64)).as_euler("xyz")


def transform_points(M: np.ndarray, points: np.ndarray) -> np.ndarray:
    return points @ M[:3, :3].T + M[:3, 3]


def screw_matrix(direction, moment, angle: float, displacement: float) -> np.ndarray:
    """Rotation by ``angle`` about the line (d, m), then translation along d."""
    d = np.asarray(direction, dtype=np.float64)
    m = np.asarray(moment, dtype=np.float64)
    q = np.cross(d, m)
    R = rotvec_to_matrix(d * angle)
    M = np.eye(4)
    M[:3, :3] = R
    M[:3, 3] = q - R @ q + displacement * d
    return M


def move_line(M: np.ndarray, direction, moment):
    """Plücker coordinates of a line after the rigid motion M."""
    d = np.asarray(direction, dtype=np.float64)
    q = np.cross(d, np.asarray(moment, dtype=np.float64))
    d2 = M[:3, :3] @ d
    q2 = transform_points(M, q[None, :])[0]
    return d2, np.cross(q2, d2)
