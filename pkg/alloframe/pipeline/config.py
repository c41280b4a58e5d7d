"""
Pipeline configuration: expert backends per kind, consensus settings and answer formatting.

Resolution order: an explicit --config file, then the ALLOFRAME_CONFIG environment variable,
then the built-in defaults.
"""
import json
import logging
import os
from typing import Dict, Optional
from alloframe.base.object_state import ConsensusParams
from alloframe.enums import ExpertBackend, ExpertKind, RouterMode
from alloframe.errors import UsageError
from alloframe.experts.http_experts import ExpertEndpointConfig
from alloframe.experts.rule_based_reasoner import DEFAULT_TIE_MARGIN
from alloframe.prompting.prompt_renderer import DEFAULT_PRECISION

logger = logging.getLogger(__name__)

CONFIG_ENV = 'ALLOFRAME_CONFIG'
DEFAULT_SEED = 42
DEFAULT_KEY = 'default'

# Backends each expert kind may use besides mock and http.
_EXTRA_BACKENDS = {
    ExpertKind.REASONER: {ExpertBackend.RULE_BASED},
    ExpertKind.DETECTOR: {ExpertBackend.GROUND_TRUTH},
    ExpertKind.ITM: {ExpertBackend.GROUND_TRUTH},
    ExpertKind.HEAD_POSE: {ExpertBackend.GROUND_TRUTH},
}


class PipelineConfig:
    """
    Everything the answering pipeline needs besides the scene and the question.

    Attributes:
        experts (Dict[str, str]): Backend per expert kind, with a 'default' entry.
        mock_script_path (str): JSON script of the mock backend.
        mock_strict (bool): Strict mode of the mock backend.
        http (Dict[str, ExpertEndpointConfig]): Endpoints per kind, with an optional 'default'.
        consensus (ConsensusParams): Lifting settings.
        router (RouterMode): Rule-based or language-model routing.
        precision (int): Decimals of rendered context numbers.
        tie_margin (float): Tie margin of the rule-based reasoner in meters.
        seed (int): Seed of every sampling step.
        use_gt_masks (bool): Read instance masks from the bundle instead of grounding.
        verify_candidates (bool): Confirm grounding candidates with a verifier.
    """

    def __init__(self, experts: Optional[Dict[str, str]] = None, mock_script_path: Optional[str] = None,
                 mock_strict: bool = False, http: Optional[Dict[str, ExpertEndpointConfig]] = None,
                 consensus: Optional[ConsensusParams] = None, router: RouterMode = RouterMode.RULES,
                 precision: int = DEFAULT_PRECISION, tie_margin: float = DEFAULT_TIE_MARGIN,
                 seed: int = DEFAULT_SEED, use_gt_masks: bool = False, verify_candidates: bool = False):
        self.experts = {DEFAULT_KEY: ExpertBackend.MOCK.value, ExpertKind.REASONER.value: ExpertBackend.RULE_BASED.value}
        self.experts.update(experts or {})
        self.mock_script_path = mock_script_path
        self.mock_strict = bool(mock_strict)
        self.http = dict(http or {})
        self.consensus = consensus or ConsensusParams()
        self.router = RouterMode(router)
        self.precision = int(precision)
        self.tie_margin = float(tie_margin)
        self.seed = int(seed)
        self.use_gt_masks = bool(use_gt_masks)
        self.verify_candidates = bool(verify_candidates)
        self.validate()

    def __repr__(self):
        return f"PipelineConfig(experts={self.experts}, router={self.router.value}, use_gt_masks={self.use_gt_masks})"

    def backend_for(self, kind: ExpertKind) -> ExpertBackend:
        kind = ExpertKind(kind)
        return ExpertBackend(self.experts.get(kind.value, self.experts[DEFAULT_KEY]))

    def endpoint_for(self, kind: ExpertKind) -> ExpertEndpointConfig:
        kind = ExpertKind(kind)
        endpoint = self.http.get(kind.value, self.http.get(DEFAULT_KEY))
        if endpoint is None:
            raise UsageError(f"Expert '{kind.value}' uses http but no endpoint is configured")
        return endpoint

    def validate(self):
        """
        Checks that every expert kind resolves to exactly one backend it supports.

        Raises:
            UsageError: On unknown kinds or backends, or unsupported combinations.
        """
        known = {kind.value for kind in ExpertKind} | {DEFAULT_KEY}
        unknown = set(self.experts) - known
        if unknown:
            raise UsageError(f"Unknown expert kinds in config: {sorted(unknown)}")
        for key, value in self.experts.items():
            try:
                ExpertBackend(value)
            except ValueError:
                raise UsageError(f"Unknown backend '{value}' for expert '{key}'")
        for kind in ExpertKind:
            backend = self.backend_for(kind)
            allowed = {ExpertBackend.MOCK, ExpertBackend.HTTP} | _EXTRA_BACKENDS.get(kind, set())
            if kind.value not in self.experts and backend not in allowed:
                # A default the kind cannot use falls back to mock.
                self.experts[kind.value] = ExpertBackend.MOCK.value
                continue
            if backend not in allowed:
                raise UsageError(f"Expert '{kind.value}' cannot use the {backend.value} backend")
            if backend == ExpertBackend.HTTP:
                self.endpoint_for(kind)
        if self.precision < 0:
            raise UsageError(f"precision must be >= 0, got {self.precision}")
        if self.tie_margin < 0:
            raise UsageError(f"tie_margin must be >= 0, got {self.tie_margin}")

    def to_dict(self) -> dict:
        return {
            'experts': dict(self.experts),
            'mock': {'script_path': self.mock_script_path, 'strict': self.mock_strict},
            'http': {key: endpoint.to_dict() for key, endpoint in self.http.items()},
            'consensus': self.consensus.to_dict(),
            'router': self.router.value,
            'precision': self.precision,
            'tie_margin': self.tie_margin,
            'seed': self.seed,
            'use_gt_masks': self.use_gt_masks,
            'verify_candidates': self.verify_candidates,
        }

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[str] = None):
        """
        Builds a config from its JSON form. A relative mock script path is resolved against base_dir.
        """
        data = data or {}
        mock = data.get('mock') or {}
        script_path = mock.get('script_path')
        if script_path and base_dir and not os.path.isabs(script_path):
            script_path = os.path.join(base_dir, script_path)
        try:
            return cls(
                experts=data.get('experts'),
                mock_script_path=script_path,
                mock_strict=mock.get('strict', False),
                http={key: ExpertEndpointConfig.from_dict(value) for key, value in (data.get('http') or {}).items()},
                consensus=ConsensusParams.from_dict(data.get('consensus')),
                router=data.get('router', RouterMode.RULES.value),
                precision=data.get('precision', DEFAULT_PRECISION),
                tie_margin=data.get('tie_margin', DEFAULT_TIE_MARGIN),
                seed=data.get('seed', DEFAULT_SEED),
                use_gt_masks=data.get('use_gt_masks', False),
                verify_candidates=data.get('verify_candidates', False),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, UsageError):
                raise
            raise UsageError(f"Invalid pipeline config: {e}")

    @classmethod
    def load(cls, path: Optional[str] = None):
        """
        Loads the config from path, else from $ALLOFRAME_CONFIG, else returns the defaults.
        """
        path = path or os.environ.get(CONFIG_ENV)
        if not path:
            return cls()
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            raise UsageError(f"Cannot read config {path}: {e}")
        logger.info("Loaded pipeline config from %s", path)
        return cls.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
