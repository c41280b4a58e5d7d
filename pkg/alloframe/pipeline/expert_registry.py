import logging
import threading
from typing import Dict, Optional, Union
from alloframe.base.scene import SceneBundle
from alloframe.enums import ExpertBackend, ExpertKind, RouterMode
from alloframe.errors import UsageError
from alloframe.experts.base import (CandidateVerifier, Detector, GeometricReasoner, HeadPoseEstimator, ItmScorer,
                                    LanguageModel, OrientationJudge, Simplifier)
from alloframe.experts.ground_truth_experts import GroundTruthExperts
from alloframe.experts.http_experts import (HttpDetector, HttpExpertClient, HttpHeadPoseEstimator, HttpItmScorer,
                                            HttpLanguageModel, HttpOrientationJudge, HttpSimplifier, HttpVerifier)
from alloframe.experts.mock_experts import MockExperts, MockScript
from alloframe.experts.rule_based_reasoner import RuleBasedReasoner
from alloframe.pipeline.config import PipelineConfig

logger = logging.getLogger(__name__)

_HTTP_CLASSES = {
    ExpertKind.DETECTOR: HttpDetector,
    ExpertKind.ITM: HttpItmScorer,
    ExpertKind.SIMPLIFIER: HttpSimplifier,
    ExpertKind.ORIENTATION: HttpOrientationJudge,
    ExpertKind.HEAD_POSE: HttpHeadPoseEstimator,
    ExpertKind.REASONER: HttpLanguageModel,
    ExpertKind.ROUTER: HttpLanguageModel,
}


class ExpertSet:
    """
    The expert handles one pipeline run uses.

    Attributes:
        router (LanguageModel): Routing model, None when routing by rules.
        verifier (CandidateVerifier): Candidate verifier, None unless enabled.
    """

    def __init__(self, detector: Detector, itm: ItmScorer, simplifier: Simplifier, orientation: OrientationJudge,
                 reasoner: Union[LanguageModel, GeometricReasoner], head_pose: Optional[HeadPoseEstimator] = None,
                 router: Optional[LanguageModel] = None, verifier: Optional[CandidateVerifier] = None):
        self.detector = detector
        self.itm = itm
        self.simplifier = simplifier
        self.orientation = orientation
        self.reasoner = reasoner
        self.head_pose = head_pose
        self.router = router
        self.verifier = verifier

    def __repr__(self):
        names = {key: type(value).__name__ for key, value in vars(self).items() if value is not None}
        return f"ExpertSet({names})"


class ExpertRegistry:
    """
    Builds ExpertSets from a PipelineConfig, sharing mock and HTTP handles across bundles.

    Ground-truth experts are bound to a bundle, so they are created per bundle.
    """

    def __init__(self, config: PipelineConfig):
        self.config = config
        self._mock: Optional[MockExperts] = None
        self._clients: Dict[str, HttpExpertClient] = {}
        self._lock = threading.Lock()

    def mock(self) -> MockExperts:
        with self._lock:
            if self._mock is None:
                if self.config.mock_script_path:
                    script = MockScript.load(self.config.mock_script_path)
                    if self.config.mock_strict:
                        script.strict = True
                else:
                    script = MockScript(strict=self.config.mock_strict)
                self._mock = MockExperts(script)
            return self._mock

    def _client(self, kind: ExpertKind) -> HttpExpertClient:
        endpoint = self.config.endpoint_for(kind)
        with self._lock:
            client = self._clients.get(endpoint.base_url)
            if client is None:
                client = HttpExpertClient(endpoint)
                self._clients[endpoint.base_url] = client
            return client

    def _build(self, kind: ExpertKind, bundle: Optional[SceneBundle]):
        backend = self.config.backend_for(kind)
        if backend == ExpertBackend.MOCK:
            return self.mock()
        if backend == ExpertBackend.HTTP:
            return _HTTP_CLASSES[kind](self._client(kind))
        if backend == ExpertBackend.RULE_BASED:
            return RuleBasedReasoner(self.config.tie_margin)
        if bundle is None:
            raise UsageError(f"Expert '{kind.value}' uses ground truth but no bundle was given")
        return GroundTruthExperts(bundle)

    def build(self, bundle: Optional[SceneBundle] = None) -> ExpertSet:
        ground_truth = {}

        def build(kind: ExpertKind):
            if self.config.backend_for(kind) == ExpertBackend.GROUND_TRUTH:
                if 'experts' not in ground_truth:
                    ground_truth['experts'] = self._build(kind, bundle)
                return ground_truth['experts']
            return self._build(kind, bundle)

        router = build(ExpertKind.ROUTER) if self.config.router == RouterMode.LLM else None
        verifier = None
        if self.config.verify_candidates:
            itm = build(ExpertKind.ITM)
            if isinstance(itm, CandidateVerifier):
                verifier = itm
            elif self.config.backend_for(ExpertKind.ITM) == ExpertBackend.HTTP:
                verifier = HttpVerifier(self._client(ExpertKind.ITM))
            else:
                logger.warning("The %s ITM backend cannot verify candidates; verification is off",
                               self.config.backend_for(ExpertKind.ITM).value)
        experts = ExpertSet(
            detector=build(ExpertKind.DETECTOR),
            itm=build(ExpertKind.ITM),
            simplifier=build(ExpertKind.SIMPLIFIER),
            orientation=build(ExpertKind.ORIENTATION),
            reasoner=build(ExpertKind.REASONER),
            head_pose=build(ExpertKind.HEAD_POSE),
            router=router,
            verifier=verifier,
        )
        logger.debug("Built %s", experts)
        return experts
