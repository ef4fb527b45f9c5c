import time

import pytest
from fastapi.testclient import TestClient

from factsheet.offline import OfflineTransport
from factsheet.service import create_app, make_transport


@pytest.fixture(scope="module")
def client(carsales_bytes, tmp_path_factory):
    workspace = str(tmp_path_factory.mktemp("ws"))
    app = create_app(workspace, transport=OfflineTransport(), seed=7)
    with TestClient(app) as c:
        c.post("/datasets", files={"file": ("CarSales.csv", carsales_bytes)})
        yield c


def wait_done(client, sheet_id, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        job = client.get(f"/sheets/{sheet_id}/status").json()
        if job["state"] != "running":
            return job
        time.sleep(0.05)
    raise AssertionError("generation never finished")


@pytest.fixture(scope="module")
def sheet_id(client):
    r = client.post("/sheets", json={"dataset": "CarSales", "seed": 7})
    assert r.status_code == 202
    sid = r.json()["sheet_id"]
    assert wait_done(client, sid)["state"] == "done"
    return sid


class TestHealthAndUpload:
    def test_health(self, client):
        assert client.get("/health").json() == {"status": "ok"}

    def test_upload_reports_shape(self, client, carsales_bytes):
        r = client.post("/datasets",
                        files={"file": ("x.csv", carsales_bytes)},
                        data={"name": "Cars2"})
        assert r.status_code == 201
        body = r.json()
        assert body["name"] == "Cars2" and body["rows"] == 275
        assert [c["name"] for c in body["columns"]] == \
            ["Brand", "Type", "Sale", "Year"]

    def test_upload_rejects_bad_csv(self, client):
        r = client.post("/datasets", files={"file": ("bad.csv", b"a,b\n1\n")})
        assert r.status_code == 422

    def test_upload_rejects_path_traversal_name(self, client, carsales_bytes):
        r = client.post("/datasets",
                        files={"file": ("x.csv", carsales_bytes)},
                        data={"name": "../evil"})
        assert r.status_code == 422


class TestGeneration:
    def test_sheet_document(self, client, sheet_id):
        sheet = client.get(f"/sheets/{sheet_id}").json()
        assert sheet["dataset_name"] == "CarSales"
        assert sheet["structure"]["sections"][0]["topic"] == "Introduction"
        assert len(sheet["facts"]) >= 4

    def test_same_inputs_same_id(self, client, sheet_id):
        r = client.post("/sheets", json={"dataset": "CarSales", "seed": 7})
        assert r.json()["sheet_id"] == sheet_id

    def test_unknown_dataset_404(self, client):
        r = client.post("/sheets", json={"dataset": "Nope"})
        assert r.status_code == 404

    def test_missing_dataset_field_422(self, client):
        assert client.post("/sheets", json={}).status_code == 422

    def test_forecast_request_rejected_up_front(self, client):
        r = client.post("/sheets", json={
            "dataset": "CarSales",
            "request": "Predict the future sales growth next year",
        })
        assert r.status_code == 422
        assert "error" in r.json()

    def test_unknown_sheet_404(self, client):
        assert client.get("/sheets/ffffffffffff").status_code == 404
        assert client.get("/sheets/ffffffffffff/status").status_code == 404


class TestEditing:
    def test_patch_then_conflict(self, client, sheet_id):
        base = client.get(f"/sheets/{sheet_id}").json()["revision"]
        ops = [{"op": "edit_text", "target": "title", "text": "Patched"}]
        r = client.patch(f"/sheets/{sheet_id}",
                         json={"revision": base, "ops": ops})
        assert r.status_code == 200
        assert r.json()["structure"]["title"] == "Patched"
        stale = client.patch(f"/sheets/{sheet_id}",
                             json={"revision": base, "ops": ops})
        assert stale.status_code == 409
        detail = stale.json()
        assert detail["expected"] == base and detail["actual"] == base + 1

    def test_invalid_op_422(self, client, sheet_id):
        base = client.get(f"/sheets/{sheet_id}").json()["revision"]
        r = client.patch(f"/sheets/{sheet_id}", json={
            "revision": base,
            "ops": [{"op": "delete_section", "topic": "Introduction"}],
        })
        assert r.status_code == 422

    def test_add_fact_from_request(self, client, sheet_id):
        before = client.get(f"/sheets/{sheet_id}").json()
        r = client.post(f"/sheets/{sheet_id}/facts",
                        json={"request": "Which brand has the highest sales?"})
        assert r.status_code == 201
        body = r.json()
        assert body["fact_id"] not in before["facts"]
        assert body["revision"] == before["revision"] + 1
        assert body["fact_id"] in body["sheet"]["facts"]

    def test_add_fact_forecast_rejected(self, client, sheet_id):
        r = client.post(f"/sheets/{sheet_id}/facts",
                        json={"request": "Forecast the future sales trend"})
        assert r.status_code == 422


class TestExport:
    def test_svg(self, client, sheet_id):
        r = client.get(f"/sheets/{sheet_id}/export?format=svg")
        assert r.status_code == 200
        assert r.headers["content-type"].startswith("image/svg+xml")
        assert r.text.lstrip().startswith("<svg")

    def test_pdf(self, client, sheet_id):
        r = client.get(f"/sheets/{sheet_id}/export?format=pdf")
        assert r.headers["content-type"] == "application/pdf"
        assert r.content.startswith(b"%PDF-1.4")

    def test_bad_format(self, client, sheet_id):
        assert client.get(
            f"/sheets/{sheet_id}/export?format=png").status_code == 422


class TestTransportFactory:
    def test_offline_default(self):
        from factsheet.offline import OfflineTransport
        assert isinstance(make_transport("offline"), OfflineTransport)

    def test_replay_needs_fixtures(self, tmp_path):
        from factsheet.agent import ReplayTransport
        t = make_transport("replay", str(tmp_path))
        assert isinstance(t, ReplayTransport)

    def test_live_reads_key_from_environment(self, monkeypatch):
        from factsheet.agent import LiveTransport
        monkeypatch.setenv("FACTSHEET_API_KEY", "k-test")
        t = make_transport("live")
        assert isinstance(t, LiveTransport)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            make_transport("psychic")
