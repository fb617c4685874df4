import httpx
import pytest

from claimsift.gateway.mock import SyncASGITransport


@pytest.fixture()
def make_client():
    """Factory: sync httpx client routed into an in-process app."""
    clients = []

    def _make(app) -> httpx.Client:
        client = httpx.Client(
            base_url="http://refscorer.test", transport=SyncASGITransport(app)
        )
        clients.append(client)
        return client

    yield _make
    for client in clients:
        client.close()
