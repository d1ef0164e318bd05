"""Regenerate cube_session.json by recording real service traffic.

Builds a synthetic box scene with a known pose, derives the exact axis
segments and 2D box a user would draw, then replays the UI's request
sequence (/solve/rotation -> /solve/translation -> /project) against the
in-process service and stores the bodies verbatim.  The committed fixture
lets the frontend tests assert against genuine solver output without a
running server.

Usage: python3 fixtures/generate.py  (from frontend/, with pose6d installed)
"""

import json
import math
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from pose6d import bounding_box_of, box_corners, generate_scene, project
from pose6d import jsonio
from pose6d.service import create_app

OUT = Path(__file__).parent / "cube_session.json"
SEED = 424242
AXIS_FRACTION = 0.75  # arrow length as a fraction of the largest dimension


def segment_to_line(p0, p1):
    """The UI's segment -> normalized line conversion, mirrored exactly."""
    la = p0[1] - p1[1]
    lb = p1[0] - p0[0]
    lc = p0[0] * p1[1] - p1[0] * p0[1]
    norm = math.hypot(la, lb)
    return {"la": la / norm, "lb": lb / norm, "lc": lc / norm}


def main() -> None:
    scene = generate_scene(seed=SEED, max_angle_deg=120.0)
    camera = jsonio.camera_to_json(scene.camera)
    dims = jsonio.dims_to_json(scene.dims)
    length = AXIS_FRACTION * max(scene.dims)
    tips = project(scene.camera, scene.pose,
                   np.vstack([np.zeros(3), np.eye(3) * length]))
    segments = {
        name: {"from": [float(tips[0][0]), float(tips[0][1])],
               "to": [float(tips[i + 1][0]), float(tips[i + 1][1])]}
        for i, name in enumerate(("x", "y", "z"))
    }
    box_obj = bounding_box_of(scene.pts)
    box = {"l": box_obj.left, "r": box_obj.right,
           "t": box_obj.top, "b": box_obj.bottom}
    dirs = {"x": [1.0, 0.0, 0.0], "y": [0.0, 1.0, 0.0], "z": [0.0, 0.0, 1.0]}

    client = TestClient(create_app())
    rotation_request = {
        "camera": camera,
        "axes": [{"dir": dirs[name],
                  "line": segment_to_line(segments[name]["from"],
                                          segments[name]["to"])}
                 for name in ("x", "y", "z")],
    }
    rotation_resp = client.post("/solve/rotation", json=rotation_request)
    assert rotation_resp.status_code == 200, rotation_resp.text
    rotation = rotation_resp.json()

    translation_request = {
        "camera": camera,
        "rotation": rotation["result"]["rotation_matrix"],
        "box": box,
        "dims": dims,
    }
    translation_resp = client.post("/solve/translation",
                                   json=translation_request)
    assert translation_resp.status_code == 200, translation_resp.text
    translation = translation_resp.json()

    project_request = {
        "camera": camera,
        "pose": {"rotation": rotation["result"]["rotation"],
                 "translation": translation["result"]["translation"]},
        "dims": dims,
    }
    project_resp = client.post("/project", json=project_request)
    assert project_resp.status_code == 200, project_resp.text
    projected = project_resp.json()

    # a genuine solver failure for the error-handling test
    bad_line = segment_to_line([10.0, 10.0], [200.0, 150.0])
    error_resp = client.post("/solve/rotation", json={
        "camera": camera,
        "axes": [{"dir": dirs["x"], "line": bad_line},
                 {"dir": dirs["y"], "line": bad_line},
                 {"dir": dirs["z"],
                  "line": segment_to_line([0.0, 100.0], [50.0, 0.0])}],
    })
    assert error_resp.status_code == 422

    fixture = {
        "note": "recorded pose6d service traffic; regenerate with generate.py",
        "seed": SEED,
        "image": {"width": 640, "height": 480},
        "camera": camera,
        "dims": dims,
        "segments": segments,
        "box": box,
        "true_pose": jsonio.pose_to_json(scene.pose),
        "known_corners": jsonio.points_to_json(scene.pts),
        "expected_requests": {
            "/solve/rotation": rotation_request,
            "/solve/translation": translation_request,
            "/project": project_request,
        },
        "responses": {
            "/solve/rotation": rotation,
            "/solve/translation": translation,
            "/project": projected,
        },
        "error_response": {
            "status": error_resp.status_code,
            "body": error_resp.json(),
        },
    }
    OUT.write_text(json.dumps(fixture, indent=2) + "\n", encoding="utf-8")
    solved = np.asarray(projected["result"]["corners"])
    truth = np.asarray(fixture["known_corners"])
    worst = float(np.linalg.norm(solved - truth, axis=1).max())
    print(f"wrote {OUT} (worst overlay corner error {worst:.3e} px)")


if __name__ == "__main__":
    main()
