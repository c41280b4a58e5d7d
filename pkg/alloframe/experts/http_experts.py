import logging
import os
from typing import List, Optional
import numpy as np
import requests
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry
from alloframe.base.geometry_context import RenderedPrompt
from alloframe.enums import OrientationStrategy, RouteLabel
from alloframe.errors import ExpertProtocolError, ExpertTransportError, UsageError
from alloframe.experts import wire_protocol
from alloframe.experts.answer_parsing import extract_answer
from alloframe.experts.base import (CandidateVerifier, Detection, Detector, HeadPoseEstimator, ImageRef,
                                    ItmScorer, LanguageModel, OrientationJudge, ReasonerAnswer, Simplifier)
from alloframe.experts.image_encoding import encode_image_ref
from alloframe.prompting.prompt_renderer import (build_key_object_extraction_prompt, build_orientation_prompt,
                                                 build_router_prompt, parse_key_objects)

logger = logging.getLogger(__name__)

API_KEY_ENV = 'ALLOFRAME_API_KEY'
BACKOFF_FACTOR = 0.25
RETRY_STATUSES = (500, 502, 503, 504)


class ExpertEndpointConfig:
    """
    Connection settings of one expert service.

    Attributes:
        base_url (str): Service root, e.g. http://localhost:8000.
        timeout_ms (int): Per-request timeout in milliseconds.
        retries (int): Retries on transport failures (connection errors, timeouts, 5xx).
        api_key (str): Optional bearer token; falls back to ALLOFRAME_API_KEY.
    """

    def __init__(self, base_url: str, timeout_ms: int = 30000, retries: int = 2, api_key: Optional[str] = None):
        if not base_url:
            raise UsageError("Expert endpoint needs a base_url")
        if not timeout_ms > 0:
            raise UsageError(f"timeout_ms must be positive, got {timeout_ms}")
        if retries < 0:
            raise UsageError(f"retries must be >= 0, got {retries}")
        self.base_url = base_url.rstrip('/')
        self.timeout_ms = int(timeout_ms)
        self.retries = int(retries)
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)

    def __repr__(self):
        return f"ExpertEndpointConfig(base_url={self.base_url}, timeout_ms={self.timeout_ms}, retries={self.retries})"

    def to_dict(self) -> dict:
        return {'base_url': self.base_url, 'timeout_ms': self.timeout_ms, 'retries': self.retries}

    @classmethod
    def from_dict(cls, data: dict):
        return cls(
            base_url=data['base_url'],
            timeout_ms=data.get('timeout_ms', 30000),
            retries=data.get('retries', 2),
            api_key=data.get('api_key'),
        )


class HttpExpertClient:
    """
    POSTs wire-protocol requests with pooled connections and transport-level retries.

    Only transport failures are retried (exponential backoff from 250 ms); 4xx replies are
    protocol errors and are never retried.
    """

    def __init__(self, config: ExpertEndpointConfig, session: Optional[requests.Session] = None):
        self.config = config
        self.session = session or self._build_session(config)

    @staticmethod
    def _build_session(config: ExpertEndpointConfig) -> requests.Session:
        session = requests.Session()
        retries = Retry(
            total=config.retries,
            backoff_factor=BACKOFF_FACTOR,
            status_forcelist=RETRY_STATUSES,
            allowed_methods=frozenset({'POST'}),
            raise_on_status=False,
        )
        adapter = HTTPAdapter(max_retries=retries)
        session.mount('http://', adapter)
        session.mount('https://', adapter)
        session.headers.update({'Content-Type': 'application/json', 'Accept': 'application/json'})
        if config.api_key:
            session.headers.update({'Authorization': f"Bearer {config.api_key}"})
        return session

    def post(self, request: wire_protocol.ExpertRequest) -> dict:
        """
        Sends one request and returns the decoded JSON body.

        Raises:
            ExpertTransportError: On connection failures, timeouts and 5xx replies.
            ExpertProtocolError: On 4xx replies and non-JSON bodies.
        """
        url = f"{self.config.base_url}{request.endpoint}"
        try:
            response = self.session.post(url, json=request.to_dict(), timeout=self.config.timeout_ms / 1000.0)
        except (requests.ConnectionError, requests.Timeout) as e:
            raise ExpertTransportError(f"POST {url} failed: {e}")
        except requests.RequestException as e:
            raise ExpertTransportError(f"POST {url} failed: {e}")

        if response.status_code >= 500:
            raise ExpertTransportError(f"POST {url} returned {response.status_code}")
        if response.status_code >= 400:
            try:
                message = response.json().get('error', response.text)
            except ValueError:
                message = response.text
            raise ExpertProtocolError(f"POST {url} returned {response.status_code}: {message}")
        try:
            payload = response.json()
        except ValueError:
            raise ExpertProtocolError(f"POST {url} returned a non-JSON body")
        logger.debug("POST %s -> %d", url, response.status_code)
        return payload


def _label_text(text: str) -> str:
    if 'boxed{' in text:
        return extract_answer(text).extracted
    return text


class HttpDetector(Detector):
    def __init__(self, client: HttpExpertClient):
        self.client = client

    def detect(self, image_ref: ImageRef, text: str) -> List[Detection]:
        if not text:
            raise UsageError("Detection text must not be empty")
        payload = self.client.post(wire_protocol.DetectRequest(encode_image_ref(image_ref), text))
        return wire_protocol.decode_detect_response(payload)


class HttpItmScorer(ItmScorer):
    """
    Servers must deliver scores already mapped into [0, 1] (e.g. min-max normalized cosine similarity).
    """

    def __init__(self, client: HttpExpertClient):
        self.client = client

    def itm_score(self, crop_ref: ImageRef, text: str) -> float:
        payload = self.client.post(wire_protocol.ItmRequest(encode_image_ref(crop_ref), text))
        return wire_protocol.decode_score_response(payload)


class HttpSimplifier(Simplifier):
    def __init__(self, client: HttpExpertClient):
        self.client = client

    def simplify(self, text: str) -> str:
        if not text:
            raise UsageError("Cannot simplify an empty description")
        payload = self.client.post(wire_protocol.SimplifyRequest(text))
        return wire_protocol.decode_text_response(payload).strip()


class HttpVerifier(CandidateVerifier):
    def __init__(self, client: HttpExpertClient):
        self.client = client

    def verify(self, crop_ref: ImageRef, text: str) -> bool:
        payload = self.client.post(wire_protocol.VerifyRequest(encode_image_ref(crop_ref), text))
        return wire_protocol.decode_verify_response(payload)


class HttpOrientationJudge(OrientationJudge):
    def __init__(self, client: HttpExpertClient):
        self.client = client

    def ask(self, crop_ref: ImageRef, keyword: str, strategy: OrientationStrategy,
            round_number: Optional[int] = None, options: Optional[List[str]] = None) -> str:
        system, prompt = build_orientation_prompt(strategy, keyword, round_number, options)
        request = wire_protocol.OrientRequest(encode_image_ref(crop_ref), keyword, strategy, round_number, options,
                                              system=system, prompt=prompt)
        return _label_text(wire_protocol.decode_label_response(self.client.post(request)))


class HttpHeadPoseEstimator(HeadPoseEstimator):
    def __init__(self, client: HttpExpertClient):
        self.client = client

    def gaze(self, crop_ref: ImageRef, keyword: str) -> np.ndarray:
        payload = self.client.post(wire_protocol.GazeRequest(encode_image_ref(crop_ref), keyword))
        vector = np.asarray(wire_protocol.decode_vector_response(payload))
        if not np.linalg.norm(vector) > 0:
            raise ExpertProtocolError("Gaze vector has zero length")
        return vector


class HttpLanguageModel(LanguageModel):
    """
    Reasoning, key-object extraction and routing through /reason and /route.
    Servers are expected to decode greedily (temperature 0).
    """

    def __init__(self, client: HttpExpertClient):
        self.client = client

    def reason(self, prompt: RenderedPrompt) -> ReasonerAnswer:
        payload = self.client.post(wire_protocol.ReasonRequest(prompt.system_text, prompt.user_text()))
        return extract_answer(wire_protocol.decode_text_response(payload))

    def extract_key_objects(self, question: str) -> List[str]:
        payload = self.client.post(wire_protocol.ReasonRequest('', build_key_object_extraction_prompt(question)))
        return parse_key_objects(wire_protocol.decode_text_response(payload))

    def route(self, question: str) -> RouteLabel:
        return wire_protocol.decode_route_response(self.client.post(wire_protocol.RouteRequest(question)))

    def route_with_prompt(self, question: str) -> RouteLabel:
        """
        Routes through /reason with the full routing prompt, for servers without /route.
        """
        system, prompt = build_router_prompt(question)
        text = wire_protocol.decode_text_response(self.client.post(wire_protocol.ReasonRequest(system, prompt)))
        try:
            return RouteLabel.parse(text)
        except ValueError as e:
            raise ExpertProtocolError(str(e))
